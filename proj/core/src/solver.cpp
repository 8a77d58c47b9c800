#include <mrgl/solver.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mrgl {

namespace {

using Eigen::VectorXd;

void check_inputs(const VectorXd& y, const GroupedDesign& design, const PenaltySchedule& schedule)
{
    require(y.size() == design.n(), "response length does not match the design");
    require(y.allFinite(), "response contains non-finite values");
    require(static_cast<int>(schedule.lambda.size()) == design.num_groups(),
            "schedule does not cover the design groups");
    for (double l : schedule.lambda) require(l >= 0.0 && std::isfinite(l), "invalid penalty level");
    require(schedule.A0 > 1.0, "A0 must exceed 1");
}

double loss_value(double rss_n, LossVariant loss)
{
    // rss_n = ||r||^2_{2,n}
    return loss == LossVariant::SquaredHalf ? 0.5 * rss_n : 0.5 * std::sqrt(rss_n);
}

struct State
{
    const GroupedDesign& design;
    const PenaltySchedule& schedule;
    LossVariant loss;
    double n;
    double sqrt_n;
    std::vector<VectorXd> a;  // coordinates
    VectorXd r;               // y - fitted
    std::vector<int> shared;  // groups whose range contains the constant vector
    std::vector<VectorXd> shared_dir;  // coordinates of the unit constant vector

    void find_shared()
    {
        const VectorXd e = VectorXd::Constant(design.n(), 1.0 / sqrt_n);
        for (int g = 0; g < design.num_groups(); ++g) {
            const auto& Q = design.factor(g).Q;
            if (Q.cols() == 0) continue;
            VectorXd u = Q.transpose() * e;
            if (u.norm() >= 1.0 - 1e-9) {
                shared.push_back(g);
                shared_dir.push_back(u / u.norm());
            }
        }
    }

    // The constant vector lies in several group ranges, so BCD crawls along the
    // split of the constant between active groups. Jump to the split minimizing
    // their penalty sum; the fit itself is unchanged.
    void rebalance()
    {
        std::vector<int> idx;
        std::vector<double> c, v, lam;
        for (size_t i = 0; i < shared.size(); ++i) {
            const int g = shared[i];
            const double an2 = a[g].squaredNorm();
            if (an2 == 0.0) continue;
            const double cg = shared_dir[i].dot(a[g]);
            const double vg = std::sqrt(std::max(an2 - cg * cg, 0.0));
            if (vg <= 1e-12 * std::sqrt(an2) || schedule.lambda[g] <= 0.0) return;
            idx.push_back(static_cast<int>(i));
            c.push_back(cg);
            v.push_back(vg);
            lam.push_back(schedule.lambda[g]);
        }
        if (idx.size() < 2) return;
        const double total = std::accumulate(c.begin(), c.end(), 0.0);
        const double lmin = *std::min_element(lam.begin(), lam.end());
        auto split = [&](double mu, size_t i) { return mu * v[i] / std::sqrt(lam[i] * lam[i] - mu * mu); };
        double lo = -lmin, hi = lmin;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            double s = 0.0;
            for (size_t i = 0; i < idx.size(); ++i) s += split(mid, i);
            (s < total ? lo : hi) = mid;
        }
        const double mu = 0.5 * (lo + hi);
        for (size_t i = 0; i < idx.size(); ++i) {
            const int g = shared[idx[i]];
            const VectorXd delta = (split(mu, i) - c[i]) * shared_dir[idx[i]];
            a[g] += delta;
            r.noalias() -= design.factor(g).Q * delta;
        }
    }

    double objective() const
    {
        double pen = 0.0;
        for (size_t g = 0; g < a.size(); ++g) pen += schedule.lambda[g] * a[g].norm();
        return loss_value(r.squaredNorm() / n, loss) + schedule.A0 * pen / sqrt_n;
    }

    // Exact minimization over group g given the others; returns ||delta||_2 of the coordinates.
    double update(int g)
    {
        const auto& Q = design.factor(g).Q;
        if (Q.cols() == 0) return 0.0;
        VectorXd z = Q.transpose() * r;
        z += a[g];
        const double zn = z.norm();
        const double thr = schedule.A0 * schedule.lambda[g] * sqrt_n;
        double scale = 0.0;
        if (loss == LossVariant::SquaredHalf) {
            scale = zn > thr ? 1.0 - thr / zn : 0.0;
        } else {
            // Partial residual norm outside the block, in Euclidean units.
            const double rp2 = (r + Q * a[g]).squaredNorm();
            const double b = std::sqrt(std::max(rp2 - zn * zn, 0.0));
            const double c = 2.0 * schedule.A0 * schedule.lambda[g];
            const double full = std::sqrt(zn * zn + b * b);
            if (zn > 0.0 && c < 1.0 && zn > c * full) {
                const double t = zn - c * b / std::sqrt(1.0 - c * c);
                scale = std::max(t, 0.0) / zn;
            }
        }
        VectorXd next = scale * z;
        VectorXd delta = next - a[g];
        const double step = delta.norm();
        if (step == 0.0) return 0.0;
        r.noalias() -= Q * delta;
        a[g] = std::move(next);
        return step;
    }
};

// KKT residuals from coordinates and residual.
KktReport kkt_from(const GroupedDesign& design, const PenaltySchedule& schedule,
                   const std::vector<VectorXd>& a, const VectorXd& r, LossVariant loss)
{
    const double sqrt_n = std::sqrt(static_cast<double>(design.n()));
    VectorXd reff = r;
    if (loss == LossVariant::RootHalf) {
        const double rn = r.norm() / sqrt_n;
        reff = rn > 0.0 ? VectorXd(r / (2.0 * rn)) : VectorXd::Zero(r.size());
    }
    KktReport rep;
    for (int g = 0; g < design.num_groups(); ++g) {
        const auto& Q = design.factor(g).Q;
        if (Q.cols() == 0) continue;
        const VectorXd h = Q.transpose() * reff;
        const double thr = schedule.A0 * schedule.lambda[g];
        const double an = a[g].norm();
        if (an == 0.0) {
            const double hn = h.norm() / sqrt_n;
            double ratio = thr > 0.0 ? hn / thr
                                     : (hn > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            if (ratio > rep.inactive_max_ratio) {
                rep.inactive_max_ratio = ratio;
                rep.worst_inactive = design.scheme().groups[g];
            }
        } else {
            const double v = (h - (thr * sqrt_n / an) * a[g]).norm() / sqrt_n;
            if (v > rep.active_max_violation) {
                rep.active_max_violation = v;
                rep.worst_active = design.scheme().groups[g];
            }
        }
    }
    return rep;
}

void finalize(FitResult& out, const GroupedDesign& design, std::vector<VectorXd> a)
{
    const int G = design.num_groups();
    out.scheme = design.scheme();
    out.family = design.family();
    out.beta.resize(G);
    out.fitted_groups.resize(G);
    out.fitted = VectorXd::Zero(design.n());
    out.active_set.clear();
    for (int g = 0; g < G; ++g) {
        const auto& F = design.factor(g);
        if (a[g].size() == 0 || a[g].squaredNorm() == 0.0) {
            out.beta[g] = VectorXd::Zero(design.scheme().dims[g]);
            out.fitted_groups[g] = VectorXd::Zero(design.n());
            if (a[g].size() != F.rank()) a[g] = VectorXd::Zero(F.rank());
            continue;
        }
        out.beta[g] = F.R_pinv * a[g];
        out.fitted_groups[g] = F.Q * a[g];
        out.fitted += out.fitted_groups[g];
        out.active_set.push_back(design.scheme().groups[g]);
    }
    out.coords = std::move(a);
}

} // namespace

FitResult fit(const VectorXd& y, const GroupedDesign& design, const PenaltySchedule& schedule,
              const FitConfig& config, const FitResult* warm)
{
    check_inputs(y, design, schedule);
    require(config.obj_tol > 0.0 && config.kkt_tol > 0.0, "tolerances must be positive");
    require(config.max_sweeps >= 1, "max_sweeps must be positive");
    const int G = design.num_groups();

    std::vector<int> order = config.order;
    if (order.empty()) {
        order.resize(G);
        std::iota(order.begin(), order.end(), 0);
    } else {
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (int g = 0; g < G; ++g)
            require(static_cast<int>(sorted.size()) == G && sorted[g] == g,
                    "sweep order must be a permutation of the groups");
    }

    State st{design, schedule, config.loss, static_cast<double>(design.n()),
             std::sqrt(static_cast<double>(design.n())), {}, y, {}, {}};
    st.find_shared();
    st.a.resize(G);
    for (int g = 0; g < G; ++g) st.a[g] = VectorXd::Zero(design.factor(g).rank());
    if (warm) {
        require(static_cast<int>(warm->coords.size()) == G, "warm start does not match design");
        for (int g = 0; g < G; ++g) {
            require(warm->coords[g].size() == design.factor(g).rank(),
                    "warm start does not match design");
            st.a[g] = warm->coords[g];
            if (st.a[g].squaredNorm() > 0.0) st.r.noalias() -= design.factor(g).Q * st.a[g];
        }
    }

    FitResult out;
    double obj = st.objective();
    out.objective_trace.push_back(obj);

    auto rel_decrease = [](double prev, double cur) {
        const double denom = std::max(std::abs(prev), std::numeric_limits<double>::min());
        return (prev - cur) / denom;
    };

    int sweeps = 0;
    bool converged = false;
    while (sweeps < config.max_sweeps) {
        // Full sweep.
        for (int g : order) st.update(g);
        st.rebalance();
        ++sweeps;
        double next = st.objective();
        double dec = rel_decrease(obj, next);
        obj = next;
        out.objective_trace.push_back(obj);

        KktReport rep = kkt_from(design, schedule, st.a, st.r, config.loss);
        if (dec <= config.obj_tol && rep.within(config.kkt_tol)) {
            converged = true;
            break;
        }

        if (!config.active_cycling) continue;
        std::vector<int> active;
        for (int g : order)
            if (st.a[g].size() > 0 && st.a[g].squaredNorm() > 0.0) active.push_back(g);
        if (active.empty()) continue;
        // Inner passes over the active groups. A pass whose total movement in
        // ||.||_{2,n} is below a tenth of kkt_tol leaves every active KKT residual
        // within that amount.
        while (sweeps < config.max_sweeps) {
            double moved = 0.0;
            for (int g : active) moved += st.update(g);
            st.rebalance();
            ++sweeps;
            next = st.objective();
            obj = next;
            out.objective_trace.push_back(obj);
            if (moved / st.sqrt_n <= 0.1 * config.kkt_tol) break;
        }
    }

    out.sweeps = sweeps;
    out.kkt = kkt_from(design, schedule, st.a, st.r, config.loss);
    finalize(out, design, std::move(st.a));
    out.converged = converged;
    return out;
}

double objective(const VectorXd& y, const GroupedDesign& design, const PenaltySchedule& schedule,
                 const std::vector<VectorXd>& beta, LossVariant loss)
{
    check_inputs(y, design, schedule);
    require(static_cast<int>(beta.size()) == design.num_groups(), "beta must cover every group");
    const double n = design.n();
    VectorXd r = y;
    double pen = 0.0;
    for (int g = 0; g < design.num_groups(); ++g) {
        require(beta[g].size() == design.scheme().dims[g], "beta block has the wrong size");
        const VectorXd f = design.apply(g, beta[g]);
        r -= f;
        pen += schedule.lambda[g] * f.norm() / std::sqrt(n);
    }
    return loss_value(r.squaredNorm() / n, loss) + schedule.A0 * pen;
}

KktReport kkt_check(const VectorXd& y, const GroupedDesign& design,
                    const PenaltySchedule& schedule, const FitResult& fit, LossVariant loss)
{
    check_inputs(y, design, schedule);
    require(static_cast<int>(fit.fitted_groups.size()) == design.num_groups(),
            "fit does not match the design");
    std::vector<VectorXd> a(design.num_groups());
    VectorXd r = y;
    for (int g = 0; g < design.num_groups(); ++g) {
        // Coordinates from fitted vectors so the check does not trust fit.coords.
        a[g] = design.factor(g).Q.transpose() * fit.fitted_groups[g];
        r -= fit.fitted_groups[g];
    }
    return kkt_from(design, schedule, a, r, loss);
}

Prediction predict(const FitResult& fit, BasisFamily family, const ResolutionScheme& scheme,
                   const Eigen::MatrixXd& X_new)
{
    require(X_new.cols() == scheme.p(), "X_new has the wrong number of columns");
    require(static_cast<int>(fit.beta.size()) == scheme.num_groups(),
            "fit does not match the scheme");
    for (Eigen::Index i = 0; i < X_new.size(); ++i) {
        const double v = X_new.data()[i];
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "X_new entries must lie in [0, 1]");
    }
    const Eigen::Index m = X_new.rows();
    Prediction out;
    out.per_component = Eigen::MatrixXd::Zero(m, scheme.p());
    std::vector<double> row;
    for (int g = 0; g < scheme.num_groups(); ++g) {
        const VectorXd& b = fit.beta[g];
        if (b.size() == 0 || b.squaredNorm() == 0.0) continue;
        const int j = scheme.groups[g].j;
        row.resize(scheme.dims[g]);
        for (Eigen::Index i = 0; i < m; ++i) {
            eval_block(family, scheme, g, X_new(i, j - 1), row.data());
            double v = 0.0;
            for (int l = 0; l < scheme.dims[g]; ++l) v += row[l] * b(l);
            out.per_component(i, j - 1) += v;
        }
    }
    out.f_hat = out.per_component.rowwise().sum();
    return out;
}

double estimate_sigma(const VectorXd& y, const GroupedDesign& design, double eps, double A0)
{
    const int n = design.n();
    auto pass = [&](double sigma) {
        const auto sched = penalty_levels(design.scheme(), n, sigma, eps, A0);
        const auto f = fit(y, design, sched);
        return std::sqrt((y - f.fitted).squaredNorm() / n);
    };
    double s = pass(1.0);
    require(s > 0.0, "residual is zero; sigma cannot be estimated");
    return pass(s);
}

} // namespace mrgl
