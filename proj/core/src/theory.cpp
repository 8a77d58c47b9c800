#include <mrgl/theory.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <cmath>

namespace mrgl {

namespace {

// x^e with the q = 0 limit convention: x^0 is the indicator of x > 0.
double lim_pow(double x, double e)
{
    if (e == 0.0) return x > 0.0 ? 1.0 : 0.0;
    return std::pow(x, e);
}

} // namespace

double J_c_q(double c, double q, int k1, int k2)
{
    require(q >= 0.0 && q <= 1.0, "q must lie in [0, 1]");
    require(k1 >= 0 && k1 <= k2, "need 0 <= k1 <= k2");
    if (k1 == k2) return 0.0;
    const double e = 1.0 - q / 2.0;
    double s = 0.0;
    if (c <= 0.0) {
        for (int k = k1 + 1; k <= k2; ++k) s += std::pow(2.0, c * k / e);
    } else {
        for (int k = 0; k <= k2 - k1 - 1; ++k) s += std::pow(2.0, -c * k / e);
    }
    return std::pow(s, e);
}

ExponentBundle exponents(double q, double alpha, double alpha0, double q0, std::optional<double> q1)
{
    require(q >= 0.0 && q <= 1.0, "q must lie in [0, 1]");
    require(q0 >= 0.0 && q0 <= 1.0, "q0 must lie in [0, 1]");
    require(alpha >= 0.5, "alpha must be >= 1/2");
    require(alpha0 >= 0.0 && alpha0 <= alpha, "alpha0 must lie in [0, alpha]");
    ExponentBundle b;
    b.q = q;
    b.q0 = q0;
    b.alpha = alpha;
    b.alpha0 = alpha0;
    const double c = std::max(1.0 - q / 2.0 - q * alpha0, 0.0);
    const double a = alpha - 0.5;
    if (a == 0.0) {
        b.gamma = 1.0;
        b.rho = 1.0;
    } else {
        b.gamma = ((2.0 - q) * a + c) / (a + c);
        b.rho = c / (a + c);
    }
    // Hölder pair.
    if (q1) {
        require(*q1 >= b.rho && *q1 > 0.0, "q1 must be >= rho");
        b.q1 = *q1;
    } else {
        b.q1 = q == 0.0 ? b.rho : 1.0;
    }
    const double rest = 1.0 - b.rho / b.q1;
    const double num = q * (1.0 - b.rho);
    if (num == 0.0)
        b.q2 = q > 0.0 ? q : 1.0;
    else
        b.q2 = rest > 0.0 ? num / rest : std::numeric_limits<double>::infinity();
    return b;
}

double J_q_alpha_alpha0(const ExponentBundle& b, int k1, int k2)
{
    const double r = b.rho;
    double lead;
    if (r <= 0.0)
        lead = 1.0;  // limits: (1/r - 1)^r -> 1, (1/r - 1)^{r-1} -> 0
    else if (r >= 1.0)
        lead = 1.0;  // 0^1 + 0^0
    else
        lead = std::pow(1.0 / r - 1.0, r) + std::pow(1.0 / r - 1.0, r - 1.0);
    const double Jq = J_c_q(1.0 - b.q / 2.0 - b.alpha0 * b.q, b.q, k1, k2);
    const double J1 = J_c_q(b.alpha - 0.5, 1.0, k1, k2);
    return lead * std::pow(Jq, 1.0 - r) * std::pow(J1, r);
}

double norm_n(const Eigen::VectorXd& v)
{
    return v.size() == 0 ? 0.0 : v.norm() / std::sqrt(static_cast<double>(v.size()));
}

SobolevNorms empirical_sobolev_norms(const std::vector<double>& block_norms, int k_star,
                                     double alpha)
{
    SobolevNorms out;
    if (block_norms.empty()) return out;
    double s = 0.0;
    for (size_t l = 1; l < block_norms.size(); ++l) {
        const int k = k_star + static_cast<int>(l);
        s += std::pow(2.0, 2.0 * alpha * k) * block_norms[l] * block_norms[l];
    }
    out.norm_alpha = std::sqrt(s);
    out.norm_sobolev = std::sqrt(s + block_norms[0] * block_norms[0]);
    return out;
}

SobolevNorms empirical_sobolev(const std::vector<Eigen::VectorXd>& blocks, int k_star, double alpha)
{
    std::vector<double> norms;
    for (const auto& b : blocks) norms.push_back(norm_n(b));
    return empirical_sobolev_norms(norms, k_star, alpha);
}

EmpiricalComplexity empirical_complexity(const std::vector<std::vector<Eigen::VectorXd>>& blocks,
                                         const ResolutionScheme& scheme,
                                         const PenaltySchedule& schedule, double alpha, double q,
                                         double q0)
{
    require(static_cast<int>(blocks.size()) == scheme.p(), "one block list per component");
    require(q0 >= 0.0 && q0 <= 1.0, "q0 must lie in [0, 1]");
    require(schedule.lambda0 > 0.0, "lambda0 must be positive");
    EmpiricalComplexity out;
    std::vector<double> norms;
    for (int j = 1; j <= scheme.p(); ++j) {
        const auto& list = blocks[j - 1];
        norms.push_back(empirical_sobolev(list, scheme.k_star, alpha).norm_alpha);
        const double w = schedule.lambda[scheme.index_of({j, scheme.k_star})] / schedule.lambda0;
        out.weights.push_back(w);
        const double base = list.empty() ? 0.0 : norm_n(list[0]);
        out.M_q0_BR_n += std::pow(w, 2.0 - q0) * lim_pow(base, q0);
    }
    out.M_alpha_q_n = lq_aggregate(norms, q);
    return out;
}

Prop1Result prop1_bound(const std::vector<double>& block_norms, double sigma_n,
                        const std::vector<double>& lambdas, const ExponentBundle& bundle,
                        int k_star, int k_max)
{
    const size_t L = static_cast<size_t>(k_max - k_star + 1);
    require(k_max >= k_star, "need k_max >= k_star");
    require(block_norms.size() == L && lambdas.size() == L,
            "need one norm and one lambda per level k_star..k_max");
    require(sigma_n > 0.0, "sigma_n must be positive");
    Prop1Result out;
    double s0 = 0.0, s = 0.0;
    for (size_t l = 1; l < L; ++l) {
        const int k = k_star + static_cast<int>(l);
        const double lam = lambdas[l];
        if (lam > sigma_n * std::pow(2.0, k / 2.0) * (1.0 + 1e-12))
            throw input_error("lambda_k exceeds sigma_n 2^{k/2} at level " + std::to_string(k));
        out.lhs += lam * std::min(block_norms[l], lam);
        const double b2 = block_norms[l] * block_norms[l];
        s0 += std::pow(2.0, 2.0 * bundle.alpha0 * k) * b2;
        s += std::pow(2.0, 2.0 * bundle.alpha * k) * b2;
    }
    const double norm0 = std::sqrt(s0);
    const double norm = std::sqrt(s);
    const double J = J_q_alpha_alpha0(bundle, k_star, k_max);
    const double r = bundle.rho;
    out.rhs = std::pow(sigma_n, bundle.gamma) * J * lim_pow(lim_pow(norm0, bundle.q), 1.0 - r) *
              lim_pow(norm, r);
    if (norm == 0.0) out.rhs = 0.0;
    return out;
}

GramDeviation gram_concentration(const GroupedDesign& design,
                                 const std::vector<Eigen::MatrixXd>& population)
{
    require(population.empty() || static_cast<int>(population.size()) == design.num_groups(),
            "one population Gram per group is required");
    GramDeviation out;
    const double n = design.n();
    for (int g = 0; g < design.num_groups(); ++g) {
        const auto& R = design.factor(g).R;
        const int d = design.scheme().dims[g];
        Eigen::MatrixXd G = (R.transpose() * R) / n;
        if (!population.empty()) {
            const auto& V = population[g];
            require(V.rows() == d && V.cols() == d, "population Gram has the wrong size");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
            require(es.eigenvalues().minCoeff() > 0.0, "population Gram must be positive definite");
            const Eigen::MatrixXd W = es.operatorInverseSqrt();
            G = W * G * W;
        }
        G -= Eigen::MatrixXd::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
        const double dev = es.eigenvalues().cwiseAbs().maxCoeff();
        out.per_group.push_back(dev);
        out.max_group_deviation = std::max(out.max_group_deviation, dev);
    }
    return out;
}

double lemma1_sum(const std::vector<int>& dims, int n, double c0, double L0, double nu_minus)
{
    require(c0 > 0.0 && L0 > 0.0 && nu_minus > 0.0 && n > 0, "invalid Lemma 1 constants");
    double s = 0.0;
    for (int d : dims)
        s += 2.0 * d *
             std::exp(-n * c0 * c0 / (2.0 * d * (L0 * L0 / nu_minus) * (1.0 + c0 / 3.0)));
    return s;
}

double cone_xi(double A0)
{
    require(A0 > 1.0, "A0 must exceed 1");
    return (A0 + 1.0) / (A0 - 1.0);
}

std::vector<bool> adaptive_set(const std::vector<Eigen::VectorXd>& fbar_groups,
                               const PenaltySchedule& schedule)
{
    require(fbar_groups.size() == schedule.lambda.size(), "fbar must cover the schedule groups");
    std::vector<bool> S(fbar_groups.size());
    for (size_t g = 0; g < S.size(); ++g)
        S[g] = norm_n(fbar_groups[g]) >= schedule.A0 * schedule.lambda[g];
    return S;
}

Theorem1Bounds theorem1_rhs(const Theorem1Inputs& in, const PenaltySchedule& schedule)
{
    const size_t G = schedule.lambda.size();
    require(in.fbar_groups.size() == G, "fbar must cover the schedule groups");
    require(in.S.size() == G, "S must be a mask over the groups");
    require(in.C_pred_S >= 0.0 && in.C_pred_adaptive >= 0.0, "C_pred must be non-negative");
    const double A0 = schedule.A0;

    Eigen::VectorXd fbar = Eigen::VectorXd::Zero(in.f_star.size());
    for (const auto& f : in.fbar_groups) {
        require(f.size() == in.f_star.size(), "fbar blocks must have length n");
        fbar += f;
    }
    const double approx = std::pow(norm_n(fbar - in.f_star), 2);

    double pen_Sc = 0.0, lam_S = 0.0, complexity = 0.0;
    for (size_t g = 0; g < G; ++g) {
        const double lam = schedule.lambda[g];
        const double nb = norm_n(in.fbar_groups[g]);
        if (in.S[g])
            lam_S += lam * lam;
        else
            pen_Sc += lam * nb;
        complexity += complexity_term(lam, nb);
    }

    Theorem1Bounds out;
    out.Delta_S = approx + 4.0 * A0 * pen_Sc;
    out.B_S = (A0 + 1.0) * (A0 + 1.0) * in.C_pred_S * lam_S;
    out.bound_basic = out.B_S + out.Delta_S;
    out.bound_combined = 4.0 * out.B_S + 2.0 * out.Delta_S;
    out.C_star_pred = std::max(8.0 * A0 * A0, 4.0 * (A0 + 1.0) * (A0 + 1.0) * in.C_pred_adaptive);
    out.bound_S_adaptive = 2.0 * approx + out.C_star_pred * complexity;
    return out;
}

double theorem2_rhs(const Theorem2Inputs& in)
{
    const auto& b = in.bundle;
    require(in.n >= 1, "n must be positive");
    require(in.alpha_star > 0.0, "alpha_star must be positive");
    require(in.k_max >= in.k_star, "need k_max >= k_star");
    const double need = std::pow(static_cast<double>(in.n), 1.0 / (2.0 * in.alpha_star + 1.0));
    if (std::ldexp(1.0, in.k_max) < need * (1.0 - 1e-12))
        throw input_error("2^k_max is below n^{1/(2 alpha_* + 1)}");
    const double tail = std::pow(static_cast<double>(in.n), -2.0 * b.alpha / (2.0 * in.alpha_star + 1.0)) *
                        in.M_alpha_tail_n * in.M_alpha_tail_n / ((std::pow(4.0, b.alpha) - 1.0) / 2.0);
    const double J = J_q_alpha_alpha0(b, in.k_star, in.k_max);
    const double level = std::pow(in.sigma_n, b.gamma) * 4.0 * J *
                         lim_pow(in.M_alpha0_q2_n, b.q * (1.0 - b.rho)) * lim_pow(in.M_alpha_q1_n, b.rho);
    const double base = std::pow(in.lambda0, 2.0 - b.q0) * in.M_q0_BR_n;
    return tail + in.C_star_pred * (level + base);
}

double C_alpha(double alpha)
{
    require(alpha > 0.0, "alpha must be positive");
    return 1.0 / std::sqrt(std::pow(4.0, alpha) - 1.0);
}

double truncation_bound(double norm_alpha_n, double alpha, int k_max)
{
    return std::pow(2.0, -alpha * k_max) * norm_alpha_n * C_alpha(alpha);
}

S2Result s2_budget(const S2Inputs& in)
{
    require(in.eps2 > 0.0 && in.eps2 < 1.0, "eps2 must lie in (0, 1)");
    require(in.c0 > 0.0 && in.nu_plus > 0.0 && in.L0 > 0.0 && in.sigma > 0.0 && in.n > 0,
            "s2 constants must be positive");
    require(in.alpha > 0.5, "alpha must exceed 1/2");
    S2Result out;
    if (in.tail_L2_sq >= 0.0)
        out.tail_L2_sq = in.tail_L2_sq;
    else if (in.C2_star)
        out.tail_L2_sq = *in.C2_star * std::pow(2.0, -2.0 * in.alpha * in.k_max) * in.M_alpha_2 * in.M_alpha_2;
    else
        out.tail_L2_sq = std::pow(C_alpha(in.alpha) * in.M_alpha_1, 2) * std::pow(2.0, -2.0 * in.alpha * in.k_max);

    const double expo = 2.0 * (in.alpha + in.alpha_star) / (2.0 * in.alpha_star + 1.0);
    const double first = std::pow(C_alpha(in.alpha - 0.5) * in.L0 * in.M_alpha_1, 2) *
                         std::abs(std::log(in.eps2)) / std::pow(static_cast<double>(in.n), expo);
    const double second = out.tail_L2_sq * std::max(1.0 / in.eps2 - 2.0, 0.0);
    out.first_branch = first <= second;
    const double inner = 2.0 * out.tail_L2_sq +
                         4.0 * in.A0 * (1.0 + in.c0) * std::sqrt(in.nu_plus) * in.S0c_penalty +
                         std::min(first, second);
    out.s2 = in.n / (in.sigma * in.sigma) * inner;
    return out;
}

double theorem5_rhs(double A0, double lambda_S0_sq, double c0, double kappa_bar, double sigma,
                    double s2, int n)
{
    require(kappa_bar > 0.0, "kappa_bar must be positive");
    require(c0 > 0.0 && c0 < 1.0, "c0 must lie in (0, 1)");
    return 4.0 * (A0 + 1.0) * (A0 + 1.0) * lambda_S0_sq /
               (((1.0 - c0) / (1.0 + c0)) * kappa_bar * kappa_bar) +
           2.0 * sigma * sigma * s2 / n;
}

} // namespace mrgl
