#include <mrgl/compatibility.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

namespace mrgl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double inf = std::numeric_limits<double>::infinity();

void finish_problem(CcProblem& P, const std::vector<double>& w, const std::vector<bool>& S,
                    double xi)
{
    const size_t K = P.dim.size();
    require(w.size() == K, "one weight per group is required");
    require(S.size() == K, "S must be a mask over the groups");
    require(xi >= 0.0 && std::isfinite(xi), "xi must be finite and non-negative");
    P.offset.assign(K, 0);
    for (size_t k = 1; k < K; ++k) P.offset[k] = P.offset[k - 1] + P.dim[k - 1];
    P.w = w;
    P.S = S;
    P.xi = xi;
    double s = 0.0;
    bool any = false;
    for (size_t k = 0; k < K; ++k) {
        require(w[k] > 0.0 && std::isfinite(w[k]), "weights must be positive");
        if (S[k] && P.dim[k] > 0) {
            s += w[k] * w[k];
            any = true;
        }
    }
    require(any, "S must contain a group of positive dimension");
    P.c_num = std::sqrt(s);
}

// Projection onto {x >= 0, sum gamma_i x_i = 1}.
void project_weighted_simplex(Eigen::Ref<VectorXd> x, const VectorXd& gamma)
{
    auto excess = [&](double tau) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            s += gamma(i) * std::max(0.0, x(i) - tau * gamma(i));
        return s - 1.0;
    };
    double lo = -1.0, hi = 1.0;
    while (excess(lo) < 0.0) lo *= 2.0;
    while (excess(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 100 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::max(0.0, x(i) - tau * gamma(i));
}

// Projection onto {sum_k w_k ||x_k|| <= radius} for consecutive blocks of x.
void project_group_ball(Eigen::Ref<VectorXd> x, const std::vector<int>& dims,
                        const std::vector<double>& w, double radius)
{
    std::vector<double> norms(dims.size());
    double total = 0.0;
    for (size_t k = 0, o = 0; k < dims.size(); o += dims[k], ++k) {
        norms[k] = x.segment(o, dims[k]).norm();
        total += w[k] * norms[k];
    }
    if (total <= radius) return;
    if (radius <= 0.0) {
        x.setZero();
        return;
    }
    auto mass = [&](double tau) {
        double s = 0.0;
        for (size_t k = 0; k < dims.size(); ++k) s += w[k] * std::max(0.0, norms[k] - tau * w[k]);
        return s;
    };
    double lo = 0.0, hi = 0.0;
    for (size_t k = 0; k < dims.size(); ++k) hi = std::max(hi, norms[k] / w[k]);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > radius ? lo : hi) = mid;
    }
    const double tau = hi;
    for (size_t k = 0, o = 0; k < dims.size(); o += dims[k], ++k) {
        const double s = norms[k] > 0.0 ? std::max(0.0, 1.0 - tau * w[k] / norms[k]) : 0.0;
        x.segment(o, dims[k]) *= s;
    }
}

enum class SideMode { Simplex, Hyperplane };

/**
 * min a^T G a over a = M x with x_S in a weighted simplex (generator mode) or on a
 * hyperplane, and the S^c blocks in the weighted group ball of radius xi.
 */
struct InnerSolver
{
    const CcProblem& P;
    std::vector<int> s_groups, c_groups;
    std::vector<int> c_dims;
    std::vector<double> c_w;

    explicit InnerSolver(const CcProblem& p) : P(p)
    {
        for (size_t k = 0; k < P.dim.size(); ++k) {
            if (P.dim[k] == 0) continue;
            if (P.S[k]) {
                s_groups.push_back(static_cast<int>(k));
            } else {
                c_groups.push_back(static_cast<int>(k));
                c_dims.push_back(P.dim[k]);
                c_w.push_back(P.w[k]);
            }
        }
    }

    /**
     * @param   gens    per S group, columns spanning its coordinates (rays or identity).
     * @param   coef    simplex weights or hyperplane normal over the stacked S variables.
     * @param   x       warm start in x coordinates (resized when empty); holds the solution.
     * @return  a
     */
    VectorXd solve(const std::vector<MatrixXd>& gens, const VectorXd& coef, SideMode mode,
                   VectorXd& x, int iterations) const
    {
        const int na = static_cast<int>(P.G.rows());
        int ns = 0;
        for (const auto& B : gens) ns += static_cast<int>(B.cols());
        int nc = 0;
        for (int d : c_dims) nc += d;
        const int nx = ns + nc;

        // M maps x to a.
        MatrixXd M = MatrixXd::Zero(na, nx);
        for (size_t i = 0, o = 0; i < s_groups.size(); o += gens[i].cols(), ++i)
            M.block(P.offset[s_groups[i]], o, gens[i].rows(), gens[i].cols()) = gens[i];
        for (size_t i = 0, o = ns; i < c_groups.size(); o += c_dims[i], ++i)
            M.block(P.offset[c_groups[i]], o, c_dims[i], c_dims[i]).setIdentity();
        // Identity generators leave M a permutation; avoid the dense triple product.
        MatrixXd H;
        if (nx == na && M.isIdentity(0.0) == false && (M.array() != 0.0).count() == na &&
            (M.array() == 1.0).count() == na) {
            Eigen::VectorXi perm(na);
            for (int c = 0; c < nx; ++c) {
                Eigen::Index r = 0;
                M.col(c).maxCoeff(&r);
                perm(c) = static_cast<int>(r);
            }
            H.resize(nx, nx);
            for (int c = 0; c < nx; ++c)
                for (int r = 0; r < nx; ++r) H(r, c) = 2.0 * P.G(perm(r), perm(c));
        } else if (nx == na && M.isIdentity(0.0)) {
            H = 2.0 * P.G;
        } else {
            H = 2.0 * M.transpose() * P.G * M;
        }

        auto project = [&](VectorXd& v) {
            auto vs = v.head(ns);
            if (mode == SideMode::Simplex) {
                project_weighted_simplex(vs, coef);
            } else {
                const double cn = coef.squaredNorm();
                vs -= ((coef.dot(vs) - 1.0) / cn) * coef;
            }
            if (nc > 0) project_group_ball(v.tail(nc), c_dims, c_w, P.xi);
        };

        if (x.size() != nx) {
            x = VectorXd::Zero(nx);
            if (mode == SideMode::Simplex)
                x.head(ns) = VectorXd::Constant(ns, 1.0 / coef.sum());
            else
                x.head(ns) = coef / coef.squaredNorm();
        }
        project(x);

        // Step size from a power-iteration estimate of the largest eigenvalue of H.
        VectorXd v = VectorXd::Ones(nx) / std::sqrt(static_cast<double>(nx));
        double L = 0.0;
        for (int it = 0; it < 60; ++it) {
            VectorXd hv = H * v;
            const double nv = hv.norm();
            if (nv == 0.0) break;
            L = nv;
            v = hv / nv;
        }
        if (L <= 0.0) return M * x;
        L *= 1.05;

        VectorXd y = x;
        double t = 1.0;
        for (int it = 0; it < iterations; ++it) {
            VectorXd xn = y - H * y / L;
            project(xn);
            const VectorXd step = xn - x;
            if ((y - xn).dot(step) > 0.0) {
                // Momentum restart.
                t = 1.0;
                y = xn;
            } else {
                const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                y = xn + ((t - 1.0) / tn) * step;
                t = tn;
            }
            x = xn;
            if (step.norm() <= 1e-15 * (1.0 + x.norm())) break;
        }
        return M * x;
    }
};

struct Face
{
    int axis = 0;
    int sign = 1;
    std::vector<double> lo, hi;  // box over the remaining axes, in increasing order
};

// Unit rays through the vertices of a face box.
MatrixXd face_rays(const Face& f, int d)
{
    const int m = d - 1;
    const int V = 1 << m;
    MatrixXd B(d, V);
    for (int v = 0; v < V; ++v) {
        VectorXd r(d);
        for (int i = 0, l = 0; i < d; ++i) {
            if (i == f.axis) {
                r(i) = f.sign;
            } else {
                r(i) = ((v >> l) & 1) ? f.hi[l] : f.lo[l];
                ++l;
            }
        }
        B.col(v) = r / r.norm();
    }
    return B;
}

struct Cell
{
    std::vector<Face> faces;  // one per S group
    double lb = 0.0;
    long id = 0;
    VectorXd warm_c;          // S^c coordinates of the parent solution
};

struct CellOrder
{
    bool operator()(const Cell& a, const Cell& b) const
    {
        return a.lb != b.lb ? a.lb > b.lb : a.id > b.id;
    }
};

// Feasible repair: shrink the S^c part into the cone, then evaluate the ratio.
double repaired_ratio(const CcProblem& P, VectorXd& a)
{
    double pen_s = 0.0, pen_c = 0.0;
    for (size_t k = 0; k < P.dim.size(); ++k) {
        const double nk = a.segment(P.offset[k], P.dim[k]).norm();
        (P.S[k] ? pen_s : pen_c) += P.w[k] * nk;
    }
    if (pen_s <= 0.0) return inf;
    if (pen_c > P.xi * pen_s) {
        const double s = P.xi * pen_s / pen_c;
        for (size_t k = 0; k < P.dim.size(); ++k)
            if (!P.S[k]) a.segment(P.offset[k], P.dim[k]) *= s;
    }
    const double q = std::max(a.dot(P.G * a), 0.0);
    return P.c_num * std::sqrt(q) / pen_s;
}

} // namespace

CcProblem cc_problem_penalty(const GroupedDesign& design, const std::vector<double>& lambda,
                             const std::vector<bool>& S, double xi)
{
    const int K = design.num_groups();
    require(static_cast<int>(lambda.size()) == K, "one lambda per group is required");
    CcProblem P;
    int total = 0;
    for (int g = 0; g < K; ++g) {
        P.dim.push_back(static_cast<int>(design.factor(g).rank()));
        total += P.dim.back();
    }
    MatrixXd Qall(design.n(), total);
    for (int g = 0, o = 0; g < K; o += P.dim[g], ++g)
        if (P.dim[g] > 0) Qall.middleCols(o, P.dim[g]) = design.factor(g).Q;
    P.G = Qall.transpose() * Qall;
    P.d_star = design.scheme().total_dim();
    finish_problem(P, lambda, S, xi);
    return P;
}

CcProblem cc_problem_sqrt_dim(const GroupedDesign& design, const std::vector<bool>& S, double xi)
{
    const int K = design.num_groups();
    CcProblem P;
    std::vector<double> w;
    int total = 0;
    for (int g = 0; g < K; ++g) {
        P.dim.push_back(design.scheme().dims[g]);
        w.push_back(std::sqrt(static_cast<double>(P.dim.back())));
        total += P.dim.back();
    }
    MatrixXd Uall = design.stacked();
    require(Uall.cols() == total, "stacked design has the wrong width");
    P.G = Uall.transpose() * Uall / static_cast<double>(design.n());
    P.d_star = total;
    finish_problem(P, w, S, xi);
    return P;
}

CcProblem cc_problem_population(const MatrixXd& V, const std::vector<int>& dims,
                                const std::vector<double>& lambda, const std::vector<bool>& S,
                                double xi)
{
    const int total = std::accumulate(dims.begin(), dims.end(), 0);
    require(V.rows() == total && V.cols() == total, "population Gram has the wrong size");
    CcProblem P;
    P.dim = dims;
    std::vector<MatrixXd> inv_sqrt(dims.size());
    for (size_t k = 0, o = 0; k < dims.size(); o += dims[k], ++k) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(V.block(o, o, dims[k], dims[k]));
        require(es.eigenvalues().minCoeff() > 0.0, "population block Grams must be positive definite");
        inv_sqrt[k] = es.operatorInverseSqrt();
    }
    P.G.resize(total, total);
    for (size_t k = 0, ok = 0; k < dims.size(); ok += dims[k], ++k)
        for (size_t l = 0, ol = 0; l < dims.size(); ol += dims[l], ++l)
            P.G.block(ok, ol, dims[k], dims[l]) =
                inv_sqrt[k] * V.block(ok, ol, dims[k], dims[l]) * inv_sqrt[l];
    P.d_star = total;
    finish_problem(P, lambda, S, xi);
    return P;
}

CcProblem cc_problem(const GroupedDesign& design, const ConeSpec& cone,
                     const std::vector<double>& lambda, const MatrixXd* V)
{
    if (cone.side == NormSide::Population) {
        require(V != nullptr, "population cone needs the population Gram");
        std::vector<double> w = lambda;
        if (cone.weights == CcWeights::SqrtDim)
            for (int g = 0; g < design.num_groups(); ++g)
                w[g] = std::sqrt(static_cast<double>(design.scheme().dims[g]));
        return cc_problem_population(*V, design.scheme().dims, w, cone.S, cone.xi);
    }
    if (cone.weights == CcWeights::SqrtDim) return cc_problem_sqrt_dim(design, cone.S, cone.xi);
    return cc_problem_penalty(design, lambda, cone.S, cone.xi);
}

double cc_ratio(const CcProblem& P, const VectorXd& a)
{
    require(a.size() == P.G.rows(), "point has the wrong size");
    double pen_s = 0.0, pen_c = 0.0;
    for (size_t k = 0; k < P.dim.size(); ++k) {
        const double nk = a.segment(P.offset[k], P.dim[k]).norm();
        (P.S[k] ? pen_s : pen_c) += P.w[k] * nk;
    }
    if (pen_s <= 0.0 || pen_c > (1.0 + 1e-12) * P.xi * pen_s) return inf;
    return P.c_num * std::sqrt(std::max(a.dot(P.G * a), 0.0)) / pen_s;
}

CcResult cc_bruteforce(const CcProblem& P, const CcOptions& opt)
{
    if (P.d_star > opt.max_dim)
        throw certification_error("d* = " + std::to_string(P.d_star) +
                                  " exceeds the certification limit " +
                                  std::to_string(opt.max_dim));
    require(opt.resolution > 0.0, "resolution must be positive");
    const InnerSolver inner(P);
    const auto& sg = inner.s_groups;
    const auto& cg = inner.c_groups;

    CcResult out;
    out.kappa_upper = inf;

    // Global floor: ratio >= sqrt(lambda_min(G)) c_num / ||w_S||.
    double wS = 0.0;
    for (int k : sg) wS += P.w[k] * P.w[k];
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P.G, Eigen::EigenvaluesOnly);
    const double floor_lb =
        std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0)) * P.c_num / std::sqrt(wS) *
        (1.0 - 1e-12);

    auto evaluate = [&](Cell& cell) {
        std::vector<MatrixXd> gens;
        std::vector<double> gam;
        for (size_t i = 0; i < sg.size(); ++i) {
            gens.push_back(face_rays(cell.faces[i], P.dim[sg[i]]));
            for (Eigen::Index v = 0; v < gens.back().cols(); ++v) gam.push_back(P.w[sg[i]]);
        }
        const VectorXd gamma = Eigen::Map<VectorXd>(gam.data(), static_cast<Eigen::Index>(gam.size()));
        VectorXd x;
        if (cell.warm_c.size() > 0) {
            x = VectorXd::Zero(gamma.size() + cell.warm_c.size());
            x.head(gamma.size()).setConstant(1.0 / gamma.sum());
            x.tail(cell.warm_c.size()) = cell.warm_c;
        }
        VectorXd a = inner.solve(gens, gamma, SideMode::Simplex, x, opt.inner_iterations);
        cell.warm_c = x.tail(x.size() - gamma.size());

        // Certified lower bound from the dual certificate built on y = a.
        const VectorXd h = P.G * a;
        const double q = a.dot(h);
        double nu = inf;
        for (size_t i = 0; i < sg.size(); ++i) {
            const VectorXd proj = gens[i].transpose() * h.segment(P.offset[sg[i]], P.dim[sg[i]]);
            nu = std::min(nu, proj.minCoeff() / P.w[sg[i]]);
        }
        double worst = 0.0;
        for (int k : cg) worst = std::max(worst, h.segment(P.offset[k], P.dim[k]).norm() / P.w[k]);
        const double nu_eff = nu - P.xi * worst;
        double lb = 0.0;
        if (nu >= 0.0 && nu_eff > 0.0 && q > 0.0)
            lb = P.c_num * nu_eff / std::sqrt(q) * (1.0 - 1e-10);
        cell.lb = lb;

        VectorXd fa = a;
        const double r = repaired_ratio(P, fa);
        if (r < out.kappa_upper) {
            out.kappa_upper = r;
            out.argmin = fa;
        }
    };

    // Initial cells: every face for each S group, positive faces only for the first.
    std::vector<std::vector<Face>> choices(sg.size());
    for (size_t i = 0; i < sg.size(); ++i) {
        const int d = P.dim[sg[i]];
        for (int ax = 0; ax < d; ++ax)
            for (int s : {1, -1}) {
                if (i == 0 && s < 0) continue;
                Face f;
                f.axis = ax;
                f.sign = s;
                f.lo.assign(d - 1, -1.0);
                f.hi.assign(d - 1, 1.0);
                choices[i].push_back(f);
            }
    }
    std::priority_queue<Cell, std::vector<Cell>, CellOrder> open;
    long next_id = 0;
    std::vector<size_t> idx(sg.size(), 0);
    while (true) {
        Cell c;
        for (size_t i = 0; i < sg.size(); ++i) c.faces.push_back(choices[i][idx[i]]);
        c.id = next_id++;
        evaluate(c);
        ++out.cells;
        open.push(std::move(c));
        size_t i = 0;
        for (; i < sg.size(); ++i) {
            if (++idx[i] < choices[i].size()) break;
            idx[i] = 0;
        }
        if (i == sg.size()) break;
    }

    double frozen_lb = inf;  // cells that cannot be split further
    auto current_lb = [&]() {
        double lb = frozen_lb;
        if (!open.empty()) lb = std::min(lb, open.top().lb);
        return std::max(lb, floor_lb);
    };

    while (!open.empty() && out.kappa_upper - current_lb() > opt.resolution &&
           out.cells < opt.max_cells) {
        Cell c = open.top();
        open.pop();
        // Split the widest box coordinate.
        int gi = -1, li = -1;
        double width = 0.0;
        for (size_t i = 0; i < c.faces.size(); ++i)
            for (size_t l = 0; l < c.faces[i].lo.size(); ++l) {
                const double wd = c.faces[i].hi[l] - c.faces[i].lo[l];
                if (wd > width) {
                    width = wd;
                    gi = static_cast<int>(i);
                    li = static_cast<int>(l);
                }
            }
        if (gi < 0 || width < 1e-12) {
            frozen_lb = std::min(frozen_lb, c.lb);
            continue;
        }
        const double mid = 0.5 * (c.faces[gi].lo[li] + c.faces[gi].hi[li]);
        for (int side = 0; side < 2; ++side) {
            Cell child;
            child.faces = c.faces;
            (side == 0 ? child.faces[gi].hi[li] : child.faces[gi].lo[li]) = mid;
            child.id = next_id++;
            child.warm_c = c.warm_c;
            evaluate(child);
            // The child covers a subset of the parent's directions.
            child.lb = std::max(child.lb, c.lb);
            ++out.cells;
            open.push(std::move(child));
        }
    }

    out.kappa = std::min(current_lb(), out.kappa_upper);
    out.gap = out.kappa_upper - out.kappa;
    out.certified = out.gap <= opt.resolution;
    return out;
}

CcResult cc_bruteforce(const GroupedDesign& design, const ConeSpec& cone,
                       const std::vector<double>& lambda, const CcOptions& opt)
{
    require(cone.side == NormSide::Empirical,
            "certified evaluation of the population cone needs cc_problem_population");
    return cc_bruteforce(cc_problem(design, cone, lambda), opt);
}

double cc_estimate(const CcProblem& P, int restarts, int iterations, std::uint64_t seed)
{
    require(restarts >= 1 && iterations >= 1, "restarts and iterations must be positive");
    const InnerSolver inner(P);
    const auto& sg = inner.s_groups;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double best = inf;

    for (int r = 0; r < restarts; ++r) {
        std::vector<VectorXd> z(sg.size());
        for (size_t i = 0; i < sg.size(); ++i) {
            z[i].resize(P.dim[sg[i]]);
            for (Eigen::Index l = 0; l < z[i].size(); ++l) z[i](l) = normal(rng);
            z[i].normalize();
        }
        VectorXd x;
        for (int it = 0; it < iterations; ++it) {
            // Linearize the S penalty at z and minimize; then realign z with the solution.
            std::vector<MatrixXd> gens;
            std::vector<double> coef;
            for (size_t i = 0; i < sg.size(); ++i) {
                gens.push_back(MatrixXd::Identity(P.dim[sg[i]], P.dim[sg[i]]));
                for (Eigen::Index l = 0; l < z[i].size(); ++l) coef.push_back(P.w[sg[i]] * z[i](l));
            }
            const VectorXd c = Eigen::Map<VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
            VectorXd a = inner.solve(gens, c, SideMode::Hyperplane, x, 300);
            VectorXd fa = a;
            best = std::min(best, repaired_ratio(P, fa));
            bool moved = false;
            for (size_t i = 0; i < sg.size(); ++i) {
                const VectorXd ak = a.segment(P.offset[sg[i]], P.dim[sg[i]]);
                const double nk = ak.norm();
                if (nk <= 0.0) continue;
                const VectorXd zn = ak / nk;
                moved |= (zn - z[i]).norm() > 1e-12;
                z[i] = zn;
            }
            if (!moved) break;
            // Re-express x in the realigned hyperplane coordinates.
            x.resize(0);
        }
    }
    return best;
}

CpredBounds c_pred_bounds(const CcProblem& P, int grid, const CcOptions& opt)
{
    require(grid >= 1, "grid must be positive");
    CpredBounds out;
    out.certified = true;
    std::vector<double> lb(grid + 1), ub(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        CcProblem Pt = P;
        Pt.xi = P.xi * i / grid;
        const CcResult r = cc_bruteforce(Pt, opt);
        lb[i] = r.kappa;
        ub[i] = r.kappa_upper;
        out.certified = out.certified && r.certified;
    }
    // C_pred <= 1/kappa(xi)^2 also holds directly.
    out.upper = lb[grid] > 0.0 ? 1.0 / (lb[grid] * lb[grid]) : inf;
    double grid_upper = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double f = std::pow(1.0 - static_cast<double>(i) / grid, 2);
        out.lower = std::max(out.lower, f / (ub[i] * ub[i]));
        if (i < grid) grid_upper = std::max(grid_upper, lb[i + 1] > 0.0 ? f / (lb[i + 1] * lb[i + 1]) : inf);
    }
    out.upper = std::min(out.upper, grid_upper);
    return out;
}

CompareCcReport compare_cc(const GroupedDesign& design, const PenaltySchedule& schedule,
                           const std::vector<VectorXd>& beta_bar, const CcOptions& opt, int grid)
{
    const int K = design.num_groups();
    require(static_cast<int>(beta_bar.size()) == K, "beta_bar must cover every group");
    require(static_cast<int>(schedule.lambda.size()) == K, "schedule does not match the design");
    const double n = design.n();
    CompareCcReport rep;
    rep.c_upper = 0.0;
    rep.c_lower = inf;
    rep.brackets_hold = true;
    for (int g = 0; g < K; ++g) {
        const auto& R = design.factor(g).R;
        const int d = design.scheme().dims[g];
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(R.transpose() * R / n, Eigen::EigenvaluesOnly);
        rep.c_upper = std::max(rep.c_upper, es.eigenvalues().maxCoeff());
        rep.c_lower = std::min(rep.c_lower, std::max(es.eigenvalues().minCoeff(), 0.0));
        const double scaled = schedule.lambda[g] * std::sqrt(n) / schedule.sigma;
        const double lo = std::sqrt(2.0 * d);
        rep.brackets_hold = rep.brackets_hold && scaled >= lo && scaled <= 2.0 * lo;
    }
    rep.S.assign(K, false);
    rep.S0.assign(K, false);
    rep.subset_holds = true;
    bool anyS = false, anyS0 = false;
    for (int g = 0; g < K; ++g) {
        require(beta_bar[g].size() == design.scheme().dims[g], "beta_bar block has the wrong size");
        const double fnorm = (design.factor(g).R * beta_bar[g]).norm() / std::sqrt(n);
        const double thr = schedule.A0 * schedule.lambda[g];
        rep.S[g] = fnorm >= thr;
        rep.S0[g] = rep.c_upper * beta_bar[g].norm() >= thr;
        anyS = anyS || rep.S[g];
        anyS0 = anyS0 || rep.S0[g];
        rep.subset_holds = rep.subset_holds && (!rep.S[g] || rep.S0[g]);
    }
    require(anyS && anyS0, "the comparison needs nonempty S and S0");
    require(rep.c_lower > 0.0, "block Grams must be nonsingular");
    rep.xi = (schedule.A0 + 1.0) / (schedule.A0 - 1.0);
    rep.xi0 = 2.0 * rep.xi * rep.c_upper / rep.c_lower;

    const CcProblem P = cc_problem_penalty(design, schedule.lambda, rep.S, rep.xi);
    rep.kappa = cc_bruteforce(P, opt);
    rep.c_pred = c_pred_bounds(P, grid, opt);
    rep.kappa0 = cc_bruteforce(cc_problem_sqrt_dim(design, rep.S0, rep.xi0), opt);
    rep.pred_le_kappa = rep.kappa.kappa <= 0.0 ||
                        rep.c_pred.lower <= (1.0 + 1e-12) / (rep.kappa.kappa * rep.kappa.kappa);
    rep.kappa_le_kappa0 = rep.kappa.kappa >= rep.kappa0.kappa_upper / (2.0 * rep.c_upper);
    return rep;
}

} // namespace mrgl
