#include <mrgl/model.hpp>
#include <mrgl/errors.hpp>
#include <mrgl/solver.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mrgl {

ResolutionScheme TruthSpec::scheme() const
{
    return make_scheme_levels(std::vector<ComponentKind>(p, ComponentKind::nonparametric()),
                              k_star, depth);
}

Eigen::VectorXd TruthSpec::block(int j, int k) const
{
    require(j >= 1 && j <= p, "component index out of range");
    require(k >= k_star, "level below the baseline");
    const int d = 1 << std::max(k - 1, k_star);
    if (!active(j) || k > depth) return Eigen::VectorXd::Zero(d);
    return coeffs[j - 1][k - k_star];
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replicate),
                      static_cast<std::uint32_t>(replicate >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

namespace {

enum Purpose : std::uint64_t { truth_stream = 1, design_stream = 2, noise_stream = 3 };

} // namespace

TruthSpec make_truth(int p, int s0, double alpha, int k_star, int depth, std::uint64_t seed,
                     const TruthOptions& opt, BasisFamily family)
{
    require(p >= 1, "p must be >= 1");
    require(s0 >= 0 && s0 <= p, "s0 must lie in [0, p]");
    require(alpha > 0.5, "alpha must exceed 1/2");
    require(depth >= k_star, "depth must be >= k_star");
    require(opt.amplitude >= 0.0, "amplitude must be non-negative");

    auto rng = make_stream(seed, 0, truth_stream);
    TruthSpec t;
    t.p = p;
    t.k_star = k_star;
    t.depth = depth;
    t.family = family;
    t.alpha.assign(p, 0.0);
    t.scale.assign(p, 0.0);
    t.coeffs.resize(p);
    t.g_max = opt.random_scale ? 1.5 : 1.0;

    std::vector<int> comps(p);
    std::iota(comps.begin(), comps.end(), 1);
    if (opt.random_support) std::shuffle(comps.begin(), comps.end(), rng);
    t.support.assign(comps.begin(), comps.begin() + s0);
    std::sort(t.support.begin(), t.support.end());

    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    for (int j : t.support) {
        t.alpha[j - 1] = alpha;
        const double c = opt.amplitude * std::pow(2.0, (alpha + 0.5) * k_star);
        t.scale[j - 1] = c;
        for (int k = k_star; k <= depth; ++k) {
            const int d = 1 << std::max(k - 1, k_star);
            Eigen::VectorXd v(d);
            for (int l = 0; l < d; ++l) v(l) = normal(rng);
            const double g = opt.random_scale ? unif(rng) : 1.0;
            const double target = c * std::pow(2.0, -(alpha + 0.5) * k) * g;
            const double vn = v.norm();
            t.coeffs[j - 1].push_back(vn > 0.0 ? Eigen::VectorXd(v * (target / vn)) : v);
        }
    }
    return t;
}

TruthSpec make_truth_from_blocks(int p, int k_star, int depth,
                                 std::vector<std::vector<Eigen::VectorXd>> coeffs,
                                 BasisFamily family)
{
    require(static_cast<int>(coeffs.size()) == p, "one coefficient list per component");
    TruthSpec t;
    t.p = p;
    t.k_star = k_star;
    t.depth = depth;
    t.family = family;
    t.alpha.assign(p, 0.0);
    t.scale.assign(p, 0.0);
    t.g_max = 0.0;
    for (int j = 1; j <= p; ++j) {
        auto& list = coeffs[j - 1];
        if (list.empty()) continue;
        require(static_cast<int>(list.size()) == depth - k_star + 1,
                "component needs one block per level k_star..depth");
        for (int k = k_star; k <= depth; ++k)
            require(list[k - k_star].size() == (1 << std::max(k - 1, k_star)),
                    "coefficient block has the wrong size");
        t.support.push_back(j);
    }
    t.coeffs = std::move(coeffs);
    return t;
}

Scenario make_scenario(const ScenarioConfig& cfg)
{
    require(cfg.n >= 2, "n must be >= 2");
    require(cfg.sigma >= 0.0 && std::isfinite(cfg.sigma), "sigma must be >= 0");
    require(cfg.s0 >= 0 && cfg.s0 <= cfg.p, "s0 must lie in [0, p]");
    require(cfg.design == DesignKind::IidUniform ||
                (cfg.correlation > -1.0 && cfg.correlation < 1.0),
            "correlation must lie in (-1, 1)");
    const int k_star = cfg.k_star >= 0 ? cfg.k_star : baseline_level(cfg.p, cfg.eps);
    const int depth = cfg.depth >= 0 ? cfg.depth : std::max(top_level(cfg.n), k_star) + 4;
    require(depth >= k_star, "depth must be >= k_star");
    Scenario sc;
    sc.n = cfg.n;
    sc.design = cfg.design;
    sc.correlation = cfg.correlation;
    sc.sigma = cfg.sigma;
    sc.seed = cfg.seed;
    sc.truth = make_truth(cfg.p, cfg.s0, cfg.alpha, k_star, depth, cfg.seed, cfg.truth, cfg.family);
    return sc;
}

Eigen::VectorXd SimData::component(int j, int k) const
{
    const auto& L = levels[j - 1];
    const Eigen::Index n = X.rows();
    if (L.size() == 0) return Eigen::VectorXd::Zero(n);
    // Column 0 is k_star; callers pass levels relative to the truth scheme.
    const Eigen::Index col = k - k_star;
    if (col < 0 || col >= L.cols()) return Eigen::VectorXd::Zero(n);
    return L.col(col);
}

Eigen::MatrixXd draw_design(const Scenario& sc, int m, std::mt19937_64& rng)
{
    const int p = sc.truth.p;
    Eigen::MatrixXd X(m, p);
    if (sc.design == DesignKind::IidUniform) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = unif(rng);
        return X;
    }
    // Gaussian copula with AR(1) correlation; marginals stay uniform.
    std::normal_distribution<double> normal;
    const double rho = sc.correlation;
    const double tail = std::sqrt(1.0 - rho * rho);
    for (int i = 0; i < m; ++i) {
        double z = normal(rng);
        for (int j = 0; j < p; ++j) {
            if (j > 0) z = rho * z + tail * normal(rng);
            X(i, j) = 0.5 * std::erfc(-z / std::sqrt(2.0));
        }
    }
    return X;
}

namespace {

// Per-component level values, n x L, for active components.
std::vector<Eigen::MatrixXd> truth_levels(const TruthSpec& truth, const Eigen::MatrixXd& X)
{
    const auto scheme = truth.scheme();
    const Eigen::Index n = X.rows();
    std::vector<Eigen::MatrixXd> out(truth.p);
    std::vector<double> row;
    for (int j : truth.support) {
        const int L = truth.depth - truth.k_star + 1;
        Eigen::MatrixXd M(n, L);
        for (int l = 0; l < L; ++l) {
            const int g = scheme.index_of({j, truth.k_star + l});
            const Eigen::VectorXd& b = truth.coeffs[j - 1][l];
            row.resize(b.size());
            for (Eigen::Index i = 0; i < n; ++i) {
                eval_block(truth.family, scheme, g, X(i, j - 1), row.data());
                double v = 0.0;
                for (Eigen::Index q = 0; q < b.size(); ++q) v += row[q] * b(q);
                M(i, l) = v;
            }
        }
        out[j - 1] = std::move(M);
    }
    return out;
}

} // namespace

Eigen::VectorXd evaluate_truth(const TruthSpec& truth, const Eigen::MatrixXd& X)
{
    require(X.cols() == truth.p, "design has the wrong number of columns");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(X.rows());
    for (const auto& M : truth_levels(truth, X))
        if (M.size() > 0) f += M.rowwise().sum();
    return f;
}

SimData simulate_on(const Scenario& sc, const Eigen::MatrixXd& X, std::uint64_t replicate)
{
    require(sc.sigma >= 0.0, "sigma must be >= 0");
    require(X.cols() == sc.truth.p, "design has the wrong number of columns");
    SimData out;
    out.X = X;
    out.levels = truth_levels(sc.truth, X);
    out.k_star = sc.truth.k_star;
    out.f_star = Eigen::VectorXd::Zero(X.rows());
    for (const auto& M : out.levels)
        if (M.size() > 0) out.f_star += M.rowwise().sum();
    auto rng = make_stream(sc.seed, replicate, noise_stream);
    std::normal_distribution<double> normal;
    out.y = out.f_star;
    if (sc.sigma > 0.0)
        for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) += sc.sigma * normal(rng);
    return out;
}

SimData simulate(const Scenario& sc, std::uint64_t replicate)
{
    require(sc.n >= 1, "n must be positive");
    auto rng = make_stream(sc.seed, replicate, design_stream);
    return simulate_on(sc, draw_design(sc, sc.n, rng), replicate);
}

SobolevNorms population_sobolev(const TruthSpec& truth, int j, double alpha)
{
    require(j >= 1 && j <= truth.p, "component index out of range");
    SobolevNorms out;
    if (!truth.active(j)) return out;
    double s_alpha = 0.0;
    for (int k = truth.k_star + 1; k <= truth.depth; ++k)
        s_alpha += std::pow(2.0, 2.0 * alpha * k) * truth.coeffs[j - 1][k - truth.k_star].squaredNorm();
    const double base = truth.coeffs[j - 1][0].squaredNorm();
    out.norm_alpha = std::sqrt(s_alpha);
    out.norm_sobolev = std::sqrt(base + s_alpha);
    // Generator tail beyond depth: c^2 g^2 sum_{k>K} 2^{(2 alpha - 2 alpha_j - 1) k}.
    const double c = truth.scale[j - 1] * truth.g_max;
    if (c > 0.0) {
        const double r = 2.0 * alpha - 2.0 * truth.alpha[j - 1] - 1.0;
        out.tail_bound = r < 0.0 ? c * c * std::pow(2.0, r * (truth.depth + 1)) / (1.0 - std::pow(2.0, r))
                                 : std::numeric_limits<double>::infinity();
    }
    return out;
}

double lq_aggregate(const std::vector<double>& values, double q)
{
    require(q >= 0.0, "q must be >= 0");
    if (q == 0.0)
        return static_cast<double>(std::count_if(values.begin(), values.end(),
                                                 [](double v) { return v > 0.0; }));
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
    double s = 0.0;
    for (double v : values) s += std::pow(v, q);
    return std::pow(s, 1.0 / q);
}

double lq_power(double aggregate, double q)
{
    if (q == 0.0) return aggregate;
    return std::pow(aggregate, q);
}

Complexity population_complexity(const TruthSpec& truth, double alpha, double q)
{
    std::vector<double> norms, base;
    for (int j = 1; j <= truth.p; ++j) {
        norms.push_back(population_sobolev(truth, j, alpha).norm_alpha);
        base.push_back(truth.active(j) ? truth.coeffs[j - 1][0].norm() : 0.0);
    }
    return {lq_aggregate(norms, q), lq_aggregate(base, q)};
}

OutOfSample out_of_sample_error(const FitResult& fit, const GroupedDesign& design,
                                const Scenario& sc, int m, std::uint64_t seed)
{
    require(m >= 2, "need at least two fresh samples");
    auto rng = make_stream(seed, 0, design_stream + 16);
    const Eigen::MatrixXd X = draw_design(sc, m, rng);
    const Eigen::VectorXd fh = predict(fit, design.family(), design.scheme(), X).f_hat;
    const Eigen::VectorXd fs = evaluate_truth(sc.truth, X);
    const Eigen::ArrayXd sq = (fh - fs).array().square();
    OutOfSample out;
    out.error = sq.mean();
    const double var = (sq - out.error).square().sum() / (m - 1);
    out.std_error = std::sqrt(var / m);
    return out;
}

} // namespace mrgl
