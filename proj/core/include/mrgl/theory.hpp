#pragma once
#include <mrgl/basis.hpp>
#include <mrgl/model.hpp>
#include <mrgl/penalties.hpp>

#include <optional>
#include <vector>

namespace mrgl {

/// Two-branch geometric sum J_c^{(q)}(k1, k2); zero when k1 == k2.
double J_c_q(double c, double q, int k1, int k2);

struct ExponentBundle
{
    double q = 0.0;
    double q0 = 0.0;
    double alpha = 1.0;
    double alpha0 = 0.0;
    double gamma = 1.0;
    double rho = 1.0;
    double q1 = 1.0;  // Hölder pair: q(1 - rho)/q2 + rho/q1 = 1
    double q2 = 1.0;
};

/**
 * gamma and rho for (q, alpha, alpha0). q1 defaults to rho when q = 0 and to 1
 * otherwise; q2 is then solved from the Hölder relation.
 */
ExponentBundle exponents(double q, double alpha, double alpha0, double q0 = 0.0,
                         std::optional<double> q1 = std::nullopt);

/// J_{q,alpha,alpha0}(k1, k2), the constant of the level-sum bound.
double J_q_alpha_alpha0(const ExponentBundle& b, int k1, int k2);

/// ||f_j||_{alpha,2,n} and the Sobolev variant from block vectors for k = k_star, k_star+1, ...
SobolevNorms empirical_sobolev(const std::vector<Eigen::VectorXd>& blocks, int k_star,
                               double alpha);
/// Same from block norms ||f_{j,k}||_{2,n}.
SobolevNorms empirical_sobolev_norms(const std::vector<double>& block_norms, int k_star,
                                     double alpha);

/// ||v||_{2,n}
double norm_n(const Eigen::VectorXd& v);

struct EmpiricalComplexity
{
    double M_alpha_q_n = 0.0;           // l_q aggregate of ||fbar_j||_{alpha,2,n}
    double M_q0_BR_n = 0.0;             // sum_j (lambda_{j,k*}/lambda0)^{2-q0} ||fbar_{j,k*}||^{q0}
    std::vector<double> weights;        // lambda_{j,k*}/lambda0 per component
};

/**
 * @param   blocks  blocks[j-1][k-k_star] = fbar_{j,k} realized on the sample; an empty
 *                  list marks a zero component.
 */
EmpiricalComplexity empirical_complexity(const std::vector<std::vector<Eigen::VectorXd>>& blocks,
                                         const ResolutionScheme& scheme,
                                         const PenaltySchedule& schedule, double alpha, double q,
                                         double q0);

struct Prop1Result
{
    double lhs = 0.0;
    double rhs = 0.0;
};

/**
 * Level-sum bound for one component.
 *
 * @param   block_norms ||fbar_{j,k}||_{2,n} for k = k_star..k_max.
 * @param   lambdas     lambda_k for k = k_star..k_max; lambda_k <= sigma_n 2^{k/2} is
 *                      required for k > k_star.
 */
Prop1Result prop1_bound(const std::vector<double>& block_norms, double sigma_n,
                        const std::vector<double>& lambdas, const ExponentBundle& bundle,
                        int k_star, int k_max);

struct GramDeviation
{
    double max_group_deviation = 0.0;
    std::vector<double> per_group;
};

/**
 * Spectral deviation ||V^{-1/2} (U^T U/n) V^{-1/2} - I|| per group.
 *
 * @param   population  per-group population Gram V_{j,k}; empty means identity.
 */
GramDeviation gram_concentration(const GroupedDesign& design,
                                 const std::vector<Eigen::MatrixXd>& population = {});

/// sum_k 2 d_k exp(-n c0^2 / (2 d_k (L0^2/nu_minus) (1 + c0/3))).
double lemma1_sum(const std::vector<int>& dims, int n, double c0, double L0, double nu_minus = 1.0);

/// xi = (A0 + 1)/(A0 - 1).
double cone_xi(double A0);

/// {(j,k): ||fbar_{j,k}||_{2,n} >= A0 lambda_{j,k}} as a mask over groups.
std::vector<bool> adaptive_set(const std::vector<Eigen::VectorXd>& fbar_groups,
                               const PenaltySchedule& schedule);

struct Theorem1Inputs
{
    std::vector<Eigen::VectorXd> fbar_groups;  // fbar_{j,k}, aligned with scheme groups
    Eigen::VectorXd f_star;
    std::vector<bool> S;                       // support set for the basic bound
    double C_pred_S = 0.0;                     // C_pred(xi, S), or an upper bound
    double C_pred_adaptive = 0.0;              // C_pred(xi, S_adaptive), or an upper bound
};

struct Theorem1Bounds
{
    double bound_basic = 0.0;       // B_S + Delta_S
    double bound_combined = 0.0;    // 4 B_S + 2 Delta_S
    double bound_S_adaptive = 0.0;  // 2||fbar - f*||^2 + C*_pred sum lambda^2 ∧ lambda ||fbar||
    double B_S = 0.0;
    double Delta_S = 0.0;
    double C_star_pred = 0.0;
};

Theorem1Bounds theorem1_rhs(const Theorem1Inputs& in, const PenaltySchedule& schedule);

struct Theorem2Inputs
{
    double M_alpha_q1_n = 0.0;    // M_{alpha,q1,n}
    double M_alpha0_q2_n = 0.0;   // M_{alpha0,q2,n}
    double M_alpha_tail_n = 0.0;  // M_{alpha,1,n}, or M_{alpha,2,n} with the approximation flag
    double M_q0_BR_n = 0.0;       // sum-form baseline complexity
    ExponentBundle bundle;
    int k_star = 0;
    int k_max = 0;
    int n = 1;
    double sigma_n = 0.0;
    double lambda0 = 0.0;
    double C_star_pred = 0.0;
    double alpha_star = 0.5;
};

double theorem2_rhs(const Theorem2Inputs& in);

/// C_alpha = (4^alpha - 1)^{-1/2}.
double C_alpha(double alpha);

/// 2^{-alpha k_max} ||f_j||_{alpha,2,n} / (4^alpha - 1)^{1/2}.
double truncation_bound(double norm_alpha_n, double alpha, int k_max);

struct S2Inputs
{
    double tail_L2_sq = -1.0;       // ||f* - fbar||^2_{L2}; < 0 means use the bound below
    double M_alpha_1 = 0.0;         // population M_{alpha,1}
    double M_alpha_2 = 0.0;         // population M_{alpha,2}, used with C2_star
    std::optional<double> C2_star;  // use the l2 tail condition instead of the l1 one
    double S0c_penalty = 0.0;       // sum over S0^c of lambda ||beta*_{j,k}||_2
    double c0 = 0.5;
    double nu_plus = 1.0;
    double eps2 = 0.5;
    double alpha = 1.0;
    double alpha_star = 0.5;
    double L0 = 1.4142135623730951;
    int k_max = 0;
    int n = 1;
    double sigma = 1.0;
    double A0 = 2.0;
};

struct S2Result
{
    double s2 = 0.0;
    double tail_L2_sq = 0.0;  // value used for ||f* - fbar||^2_{L2}
    bool first_branch = true; // which argument attained the min
};

S2Result s2_budget(const S2Inputs& in);

/// 4(A0+1)^2 ||lambda_S0||^2 / (((1-c0)/(1+c0)) kappa_bar^2) + 2 sigma^2 s2 / n.
double theorem5_rhs(double A0, double lambda_S0_sq, double c0, double kappa_bar, double sigma,
                    double s2, int n);

} // namespace mrgl
