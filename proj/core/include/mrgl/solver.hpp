#pragma once
#include <mrgl/basis.hpp>
#include <mrgl/penalties.hpp>

#include <vector>

namespace mrgl {

/// SquaredHalf: 1/2 ||y - f||^2_{2,n}; RootHalf: 1/2 ||y - f||_{2,n}.
enum class LossVariant { SquaredHalf, RootHalf };

struct FitConfig
{
    double obj_tol = 1e-8;    // relative objective decrease per sweep
    double kkt_tol = 1e-6;    // KKT violation
    int max_sweeps = 10000;
    LossVariant loss = LossVariant::SquaredHalf;
    std::vector<int> order;   // group visiting order; empty means ascending (j, then k)
    bool active_cycling = true;  // cycle over the active groups between full sweeps
};

struct KktReport
{
    double inactive_max_ratio = 0.0;    // max ||P r||_{2,n} / (A0 lambda) over inactive groups
    double active_max_violation = 0.0;  // max ||P r - A0 lambda f/||f||_{2,n}||_{2,n} over active groups
    GroupKey worst_inactive{};
    GroupKey worst_active{};

    bool within(double tol) const
    {
        return inactive_max_ratio <= 1.0 + tol && active_max_violation <= tol;
    }
};

struct FitResult
{
    ResolutionScheme scheme;
    BasisFamily family = BasisFamily::Fourier;
    std::vector<Eigen::VectorXd> beta;           // minimal-norm coefficients per group
    std::vector<Eigen::VectorXd> coords;         // coordinates in the orthonormal factor
    std::vector<Eigen::VectorXd> fitted_groups;  // f_{j,k} in R^n
    Eigen::VectorXd fitted;
    std::vector<GroupKey> active_set;
    std::vector<double> objective_trace;         // initial value, then one entry per sweep
    KktReport kkt;
    bool converged = false;
    int sweeps = 0;
};

/**
 * Cyclic block coordinate descent on
 *   L(y - sum f_{j,k}) + A0 sum lambda_{j,k} ||f_{j,k}||_{2,n},  f_{j,k} in Range(U_{j,k}).
 *
 * @param   warm    optional starting point (coordinates of a previous fit on the same design).
 */
FitResult fit(const Eigen::VectorXd& y, const GroupedDesign& design,
              const PenaltySchedule& schedule, const FitConfig& config = {},
              const FitResult* warm = nullptr);

double objective(const Eigen::VectorXd& y, const GroupedDesign& design,
                 const PenaltySchedule& schedule, const std::vector<Eigen::VectorXd>& beta,
                 LossVariant loss = LossVariant::SquaredHalf);

KktReport kkt_check(const Eigen::VectorXd& y, const GroupedDesign& design,
                    const PenaltySchedule& schedule, const FitResult& fit,
                    LossVariant loss = LossVariant::SquaredHalf);

struct Prediction
{
    Eigen::VectorXd f_hat;
    Eigen::MatrixXd per_component;  // m x p
};

Prediction predict(const FitResult& fit, BasisFamily family, const ResolutionScheme& scheme,
                   const Eigen::MatrixXd& X_new);

/// Pilot fit at sigma = 1, residual RMS as the noise scale, one refit. Not part of
/// the theory, which takes sigma as known.
double estimate_sigma(const Eigen::VectorXd& y, const GroupedDesign& design, double eps,
                      double A0 = 2.0);

} // namespace mrgl
