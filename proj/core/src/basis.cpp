#include <mrgl/basis.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace mrgl {

std::string to_string(const GroupKey& g)
{
    return std::to_string(g.j) + ":" + std::to_string(g.k);
}

GroupKey parse_group_key(const std::string& s)
{
    auto pos = s.find(':');
    require(pos != std::string::npos, "group key '" + s + "' is not of the form j:k");
    try {
        size_t used_j = 0, used_k = 0;
        int j = std::stoi(s.substr(0, pos), &used_j);
        int k = std::stoi(s.substr(pos + 1), &used_k);
        require(used_j == pos && used_k == s.size() - pos - 1, "trailing characters");
        return {j, k};
    } catch (const std::logic_error&) {
        throw input_error("group key '" + s + "' is not of the form j:k");
    }
}

ComponentKind ComponentKind::parametric(int d_star)
{
    require(d_star >= 1, "parametric component needs d_star >= 1");
    return ComponentKind{d_star};
}

int ResolutionScheme::total_dim() const
{
    int d = 0;
    for (int v : dims) d += v;
    return d;
}

std::optional<int> ResolutionScheme::find(const GroupKey& g) const
{
    if (g.j < 1 || g.j > p()) return std::nullopt;
    int first = first_group[g.j - 1];
    int last = first_group[g.j];
    int idx = first + (g.k - k_star);
    if (idx < first || idx >= last) return std::nullopt;
    return idx;
}

int ResolutionScheme::index_of(const GroupKey& g) const
{
    auto idx = find(g);
    if (!idx) throw input_error("group " + to_string(g) + " is not in the scheme");
    return *idx;
}

int baseline_level(int p, double eps)
{
    require(p >= 1, "p must be >= 1");
    require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    const double t = 2.0 * std::log(p / eps);
    require(t >= 1.0, "2 log(p/eps) must be >= 1");
    int k = 0;
    while (std::ldexp(1.0, k) < t) ++k;
    return k;
}

int top_level(int n)
{
    require(n >= 2, "n must be >= 2");
    int k = 0;
    while (std::ldexp(1.0, k + 1) < n) ++k;
    return k;
}

ResolutionScheme make_scheme_levels(std::vector<ComponentKind> kinds, int k_star, int k_max)
{
    require(!kinds.empty(), "at least one component is required");
    require(k_star >= 0, "k_star must be non-negative");
    require(k_max >= k_star, "k_max must be >= k_star");
    require(k_max <= 30, "k_max too large");

    ResolutionScheme s;
    s.k_star = k_star;
    s.k_max = k_max;
    s.kinds = std::move(kinds);
    int offset = 0;
    for (int j = 1; j <= s.p(); ++j) {
        s.first_group.push_back(static_cast<int>(s.groups.size()));
        const auto& kind = s.kinds[j - 1];
        const int top = kind.is_parametric() ? k_star : k_max;
        for (int k = k_star; k <= top; ++k) {
            int d = kind.is_parametric() ? kind.d_star : (1 << std::max(k - 1, k_star));
            s.groups.push_back({j, k});
            s.dims.push_back(d);
            s.offsets.push_back(offset);
            offset += d;
        }
    }
    s.first_group.push_back(static_cast<int>(s.groups.size()));
    return s;
}

ResolutionScheme make_scheme(int p, std::vector<ComponentKind> kinds, int n, double eps,
                             const SchemeOverrides& ov)
{
    require(p >= 1, "p must be >= 1");
    require(n >= 2, "n must be >= 2");
    if (kinds.empty()) kinds.assign(p, ComponentKind::nonparametric());
    require(static_cast<int>(kinds.size()) == p, "kinds must have one entry per component");

    const int k_star = ov.k_star ? *ov.k_star : baseline_level(p, eps);
    const int k_max = ov.k_max ? *ov.k_max : top_level(n);
    if (k_max < k_star) {
        std::ostringstream msg;
        msg << "top level k_max=" << k_max << " is below the baseline level k_star=" << k_star
            << "; need n > 2^" << k_star << ", i.e. n >= " << ((1L << k_star) + 1);
        throw input_error(msg.str());
    }
    return make_scheme_levels(std::move(kinds), k_star, k_max);
}

int block_size(const ResolutionScheme& scheme, int j, int k)
{
    return scheme.dims[scheme.index_of({j, k})];
}

int index_offset(const ResolutionScheme& scheme, int j, int k)
{
    scheme.index_of({j, k});
    if (scheme.kinds[j - 1].is_parametric() || k == scheme.k_star) return 0;
    return 1 << (k - 1);
}

std::string to_string(BasisFamily f)
{
    return f == BasisFamily::Fourier ? "fourier" : "haar";
}

BasisFamily parse_basis_family(const std::string& s)
{
    if (s == "fourier") return BasisFamily::Fourier;
    if (s == "haar") return BasisFamily::Haar;
    throw input_error("unknown basis family '" + s + "'");
}

double sup_bound(BasisFamily family, const ResolutionScheme& scheme)
{
    double bound = 1.0;  // monomials on [0, 1] and the constant
    bool nonparametric = false;
    for (const auto& kind : scheme.kinds) nonparametric |= !kind.is_parametric();
    if (!nonparametric) return bound;
    if (family == BasisFamily::Fourier) return std::max(bound, std::numbers::sqrt2);
    // Haar wavelets at scale l have height 2^{l/2}; the top level holds scale k_max - 1.
    if (scheme.k_max >= 1) bound = std::max(bound, std::pow(2.0, 0.5 * (scheme.k_max - 1)));
    return bound;
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double haar(long m, double x)
{
    if (m == 1) return 1.0;
    int l = 0;
    while ((2L << l) <= m - 1) ++l;
    const long i = (m - 1) - (1L << l);
    const double scale = std::ldexp(1.0, l);
    const double t = x * scale;
    long cell = std::min(static_cast<long>(std::floor(t)), (1L << l) - 1);
    if (cell != i) return 0.0;
    const double h = std::sqrt(scale);
    return (t - static_cast<double>(i) < 0.5) ? h : -h;
}

// Fourier functions m0+1..m0+d at x. Frequencies advance by angle rotation,
// restarting from exact values every few steps to bound drift.
void fourier_run(long m0, int d, double x, double* out)
{
    constexpr int restart = 32;
    const double cs = std::cos(two_pi * x);
    const double sn = std::sin(two_pi * x);
    long h_cur = -1;
    double c = 0.0, s = 0.0;
    int steps = 0;
    for (int l = 0; l < d; ++l) {
        const long m = m0 + 1 + l;
        if (m == 1) {
            out[l] = 1.0;
            continue;
        }
        const long h = m / 2;
        if (h != h_cur) {
            if (h_cur < 0 || h != h_cur + 1 || ++steps >= restart) {
                c = std::cos(two_pi * static_cast<double>(h) * x);
                s = std::sin(two_pi * static_cast<double>(h) * x);
                steps = 0;
            } else {
                const double c2 = c * cs - s * sn;
                s = s * cs + c * sn;
                c = c2;
            }
            h_cur = h;
        }
        out[l] = std::numbers::sqrt2 * ((m % 2 == 0) ? c : s);
    }
}

} // namespace

double eval_global(BasisFamily family, long m, double x)
{
    require(m >= 1, "basis index must be >= 1");
    require(std::isfinite(x) && x >= 0.0 && x <= 1.0, "basis argument must lie in [0, 1]");
    if (family == BasisFamily::Haar) return haar(m, x);
    double v;
    fourier_run(m - 1, 1, x, &v);
    return v;
}

void eval_block(BasisFamily family, const ResolutionScheme& scheme, int g, double x, double* out)
{
    const auto key = scheme.groups[g];
    const int d = scheme.dims[g];
    if (scheme.kinds[key.j - 1].is_parametric()) {
        double v = 1.0;
        for (int l = 0; l < d; ++l) {
            v *= x;
            out[l] = v;
        }
        return;
    }
    const long m0 = index_offset(scheme, key.j, key.k);
    if (family == BasisFamily::Fourier) {
        fourier_run(m0, d, x, out);
    } else {
        for (int l = 0; l < d; ++l) out[l] = haar(m0 + 1 + l, x);
    }
}

double eval_basis(BasisFamily family, const ResolutionScheme& scheme, int j, int k, int ell,
                  double x)
{
    const int g = scheme.index_of({j, k});
    const int d = scheme.dims[g];
    require(ell >= 1 && ell <= d, "basis index ell out of range for group " + to_string(GroupKey{j, k}));
    require(std::isfinite(x) && x >= 0.0 && x <= 1.0, "basis argument must lie in [0, 1]");
    std::vector<double> row(d);
    eval_block(family, scheme, g, x, row.data());
    return row[ell - 1];
}

GroupFactor orthonormal_factor(const Eigen::MatrixXd& U, double rank_tol)
{
    using Eigen::MatrixXd;
    const Eigen::Index n = U.rows(), d = U.cols();
    GroupFactor f;

    // Tall, well-conditioned blocks: Cholesky QR, repeated once unless the Gram is
    // nearly the identity up to scale. The condition guard keeps this path far from
    // the rank tolerance.
    if (n >= d && d > 0) {
        MatrixXd G = MatrixXd::Zero(d, d);
        G.selfadjointView<Eigen::Lower>().rankUpdate(U.transpose());
        Eigen::LLT<MatrixXd> llt(G);
        if (llt.info() == Eigen::Success) {
            MatrixXd L1 = llt.matrixL();
            const Eigen::VectorXd diag = L1.diagonal();
            if (diag.minCoeff() > 1e-6 * diag.maxCoeff()) {
                MatrixXd Q1 = L1.transpose().triangularView<Eigen::Upper>()
                                  .solve<Eigen::OnTheRight>(U);
                G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
                const auto& ev = es.eigenvalues();
                if (ev(0) > 0.0 && ev(d - 1) <= 100.0 * ev(0)) {
                    f.Q = std::move(Q1);
                    f.R = L1.transpose();
                    f.R_pinv = f.R.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(d, d));
                    return f;
                }
                MatrixXd G2 = MatrixXd::Zero(d, d);
                G2.selfadjointView<Eigen::Lower>().rankUpdate(Q1.transpose());
                Eigen::LLT<MatrixXd> llt2(G2);
                if (llt2.info() == Eigen::Success) {
                    MatrixXd L2 = llt2.matrixL();
                    f.Q = L2.transpose().triangularView<Eigen::Upper>()
                              .solve<Eigen::OnTheRight>(Q1);
                    MatrixXd R = L2.transpose() * L1.transpose();
                    f.R = R.triangularView<Eigen::Upper>();
                    f.R_pinv = f.R.triangularView<Eigen::Upper>().solve(
                        MatrixXd::Identity(d, d));
                    return f;
                }
            }
        }
    }

    Eigen::BDCSVD<MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    int r = 0;
    if (s.size() > 0 && s(0) > 0.0) {
        const double tol = rank_tol * s(0);
        while (r < s.size() && s(r) > tol) ++r;
    }
    f.Q = svd.matrixU().leftCols(r);
    f.R = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    f.R_pinv = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal();
    return f;
}

GroupedDesign::GroupedDesign(int n, BasisFamily family, ResolutionScheme scheme,
                             std::vector<GroupFactor> factors)
    : n_(n), family_(family), scheme_(std::move(scheme)), factors_(std::move(factors))
{
    require(static_cast<int>(factors_.size()) == scheme_.num_groups(),
            "one factor per group is required");
}

Eigen::MatrixXd GroupedDesign::block(int g) const
{
    return factors_[g].Q * factors_[g].R;
}

Eigen::VectorXd GroupedDesign::project(int g, const Eigen::VectorXd& v) const
{
    const auto& Q = factors_[g].Q;
    return Q * (Q.transpose() * v);
}

Eigen::VectorXd GroupedDesign::apply(int g, const Eigen::VectorXd& b) const
{
    return factors_[g].Q * (factors_[g].R * b);
}

Eigen::VectorXd GroupedDesign::coef_from_fitted(int g, const Eigen::VectorXd& f) const
{
    return factors_[g].R_pinv * (factors_[g].Q.transpose() * f);
}

Eigen::MatrixXd GroupedDesign::stacked() const
{
    Eigen::MatrixXd U(n_, scheme_.total_dim());
    for (int g = 0; g < num_groups(); ++g)
        U.middleCols(scheme_.offsets[g], scheme_.dims[g]) = block(g);
    return U;
}

Eigen::MatrixXd design_block(const Eigen::MatrixXd& X, BasisFamily family,
                             const ResolutionScheme& scheme, int g)
{
    const int j = scheme.groups[g].j;
    const int d = scheme.dims[g];
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> U(X.rows(), d);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        eval_block(family, scheme, g, X(i, j - 1), U.row(i).data());
    return U;
}

GroupedDesign assemble_design(const Eigen::MatrixXd& X, BasisFamily family,
                              const ResolutionScheme& scheme, const AssembleOptions& opt)
{
    require(X.cols() == scheme.p(), "covariate matrix has " + std::to_string(X.cols()) +
                                        " columns but the scheme has p=" +
                                        std::to_string(scheme.p()));
    require(X.rows() >= 1, "covariate matrix has no rows");
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double v = X(i, c);
            if (!std::isfinite(v)) throw input_error("non-finite covariate");
            if (v < 0.0 || v > 1.0)
                throw input_error("covariate x_" + std::to_string(c + 1) +
                                  " outside [0, 1]; rescale first");
        }

    const int G = scheme.num_groups();
    std::vector<GroupFactor> factors(G);
    auto work = [&](int start, int stride) {
        for (int g = start; g < G; g += stride)
            factors[g] = orthonormal_factor(design_block(X, family, scheme, g), opt.rank_tol);
    };
    const int threads = std::clamp(opt.threads, 1, std::max(1, G));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    return GroupedDesign(static_cast<int>(X.rows()), family, scheme, std::move(factors));
}

Eigen::MatrixXd rescale_unit(const Eigen::MatrixXd& X)
{
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double lo = X.col(c).minCoeff();
        const double hi = X.col(c).maxCoeff();
        require(std::isfinite(lo) && std::isfinite(hi), "non-finite covariate");
        if (hi > lo)
            out.col(c) = ((X.col(c).array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0);
        else
            out.col(c).setZero();
    }
    return out;
}

void write_design_csv(std::ostream& os, const GroupedDesign& design)
{
    const auto& s = design.scheme();
    bool first = true;
    for (int g = 0; g < s.num_groups(); ++g)
        for (int l = 1; l <= s.dims[g]; ++l) {
            os << (first ? "" : ",") << s.groups[g].j << ':' << s.groups[g].k << ':' << l;
            first = false;
        }
    os << '\n';
    const Eigen::MatrixXd U = design.stacked();
    os.precision(17);
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        for (Eigen::Index c = 0; c < U.cols(); ++c) os << (c ? "," : "") << U(i, c);
        os << '\n';
    }
}

} // namespace mrgl
