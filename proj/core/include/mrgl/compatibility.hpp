#pragma once
#include <mrgl/basis.hpp>
#include <mrgl/penalties.hpp>

#include <cstdint>
#include <vector>

namespace mrgl {

enum class CcWeights { Penalty, SqrtDim };
enum class NormSide { Empirical, Population };

/// Cone {b: sum_{S^c} w ||.|| <= xi sum_S w ||.||} and the weights defining the ratio.
struct ConeSpec
{
    double xi = 3.0;
    std::vector<bool> S;  // mask over scheme groups
    CcWeights weights = CcWeights::Penalty;
    NormSide side = NormSide::Empirical;
};

/**
 * Compatibility ratio in reduced coordinates: c_num sqrt(a^T G a) / sum_S w_k ||a_k||
 * minimized over sum_{S^c} w_k ||a_k|| <= xi sum_S w_k ||a_k||.
 */
struct CcProblem
{
    Eigen::MatrixXd G;
    std::vector<int> offset;  // start of group k in a
    std::vector<int> dim;     // reduced dimension of group k
    std::vector<double> w;
    std::vector<bool> S;
    double xi = 3.0;
    double c_num = 1.0;
    int d_star = 0;           // coefficient dimension of the original problem
};

/// Weighted by lambda with ||U_k b_k||_{2,n} group norms (prediction-factor version).
CcProblem cc_problem_penalty(const GroupedDesign& design, const std::vector<double>& lambda,
                             const std::vector<bool>& S, double xi);
/// Weighted by d_k^{1/2} with ||b_k||_2 group norms.
CcProblem cc_problem_sqrt_dim(const GroupedDesign& design, const std::vector<bool>& S, double xi);
/**
 * Population version from the full coefficient Gram V = E[U^T U]/n (blocks ordered as the
 * scheme), weighted by lambda with population group norms.
 */
CcProblem cc_problem_population(const Eigen::MatrixXd& V, const std::vector<int>& dims,
                                const std::vector<double>& lambda, const std::vector<bool>& S,
                                double xi);
/// Dispatch on the cone's weights and side; population side needs V.
CcProblem cc_problem(const GroupedDesign& design, const ConeSpec& cone,
                     const std::vector<double>& lambda, const Eigen::MatrixXd* V = nullptr);

struct CcOptions
{
    double resolution = 1e-4;  // target certified gap kappa_upper - kappa
    int max_cells = 200000;
    int max_dim = 8;           // d* limit for certification
    int inner_iterations = 200;
};

struct CcResult
{
    double kappa = 0.0;        // certified lower bound
    double kappa_upper = 0.0;  // ratio attained at a feasible point
    double gap = 0.0;
    bool certified = false;    // gap <= resolution
    int cells = 0;
    Eigen::VectorXd argmin;    // feasible point attaining kappa_upper
};

/**
 * Certified minimization by branch and bound over the directions of the S groups.
 * Throws certification_error when d* exceeds opt.max_dim.
 */
CcResult cc_bruteforce(const CcProblem& problem, const CcOptions& opt = {});
CcResult cc_bruteforce(const GroupedDesign& design, const ConeSpec& cone,
                       const std::vector<double>& lambda, const CcOptions& opt = {});

/// Ratio at a given point (infinity when the S part is zero or the point is outside the cone).
double cc_ratio(const CcProblem& problem, const Eigen::VectorXd& a);

/// Random-restart local minimization. The result is an upper bound on kappa only.
double cc_estimate(const CcProblem& problem, int restarts = 64, int iterations = 30,
                   std::uint64_t seed = 0);

struct CpredBounds
{
    double lower = 0.0;
    double upper = 0.0;
    bool certified = false;  // every kappa(t) on the grid certified
};

/**
 * Bounds on sup_b {pen_S - pen_{S^c}/xi}_+^2 / (||lambda_S||^2 ||Ub||^2_{2,n}) from
 * certified kappa(t, S) on a grid t in [0, xi], capped by 1/kappa(xi, S)^2. Requires
 * penalty weights.
 */
CpredBounds c_pred_bounds(const CcProblem& problem, int grid = 8, const CcOptions& opt = {});

struct CompareCcReport
{
    double c_upper = 0.0;  // largest block-Gram eigenvalue
    double c_lower = 0.0;  // smallest block-Gram eigenvalue
    std::vector<bool> S;   // ||U_k bbar_k||_{2,n} >= A0 lambda_k
    std::vector<bool> S0;  // c_upper ||bbar_k||_2 >= A0 lambda_k
    double xi = 0.0;
    double xi0 = 0.0;
    bool brackets_hold = false;  // sqrt(2 d) <= lambda sqrt(n)/sigma <= 2 sqrt(2 d)
    bool subset_holds = false;   // S within S0
    CpredBounds c_pred;
    CcResult kappa;              // penalty weights, (xi, S)
    CcResult kappa0;             // sqrt-dim weights, (xi0, S0)
    bool pred_le_kappa = false;    // c_pred.lower <= 1/kappa^2: not refuted by certified bounds
    bool kappa_le_kappa0 = false;  // kappa >= kappa0_upper/(2 c_upper): certified
};

/// Evaluates both sides of the prediction-factor / compatibility comparison chain.
CompareCcReport compare_cc(const GroupedDesign& design, const PenaltySchedule& schedule,
                           const std::vector<Eigen::VectorXd>& beta_bar, const CcOptions& opt = {},
                           int grid = 8);

} // namespace mrgl
