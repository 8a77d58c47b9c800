#pragma once
#include <mrgl/basis.hpp>

#include <vector>

namespace mrgl {

struct PenaltySchedule
{
    std::vector<double> lambda;  // aligned with scheme.groups
    double lambda0 = 0.0;        // sigma * sqrt(2 log(p/eps) / n)
    double sigma = 1.0;
    double eps = 1.0;
    double A0 = 2.0;
};

/// lambda_{j,k} = sigma (sqrt(d'/n) + sqrt(2 log(p/eps)/n)), d' = 2^k or d*_j.
PenaltySchedule penalty_levels(const ResolutionScheme& scheme, int n, double sigma, double eps,
                               double A0 = 2.0);

struct Omega0Result
{
    bool holds = true;
    double worst_ratio = 0.0;  // +inf when some lambda is 0 and the projection is not
    GroupKey argmax{};
};

/// Noise majorization: max over groups of ||P_{j,k} residual||_{2,n} / lambda_{j,k} <= 1.
Omega0Result omega0_check(const GroupedDesign& design, const Eigen::VectorXd& residual,
                          const PenaltySchedule& schedule);

/// Bound on the failure probability of the majorization event.
double omega0_failure_bound(int p, double eps);

/// lambda^2 ∧ (lambda * norm), the per-group complexity term.
double complexity_term(double lambda, double fbar_norm);

/**
 * Same quantity written through the schedule constants, divided by sigma^2/n:
 * (2^{delta_k/2} d^{1/2} + sqrt(2 log(p/eps)))^2 * min(1, norm/lambda),
 * delta_k = 1{k > k_star}.
 */
double complexity_term_normalized(const ResolutionScheme& scheme, const PenaltySchedule& schedule,
                                  int g, double fbar_norm);

} // namespace mrgl
