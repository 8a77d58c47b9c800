#include <mrgl/penalties.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrgl {

PenaltySchedule penalty_levels(const ResolutionScheme& scheme, int n, double sigma, double eps,
                               double A0)
{
    require(n >= 1, "n must be positive");
    require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
    require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    require(A0 > 1.0, "A0 must exceed 1");
    const double two_log = 2.0 * std::log(scheme.p() / eps);
    require(two_log >= 1.0, "2 log(p/eps) must be >= 1");

    PenaltySchedule s;
    s.sigma = sigma;
    s.eps = eps;
    s.A0 = A0;
    s.lambda0 = sigma * std::sqrt(two_log / n);
    s.lambda.resize(scheme.num_groups());
    for (int g = 0; g < scheme.num_groups(); ++g) {
        const auto key = scheme.groups[g];
        const auto& kind = scheme.kinds[key.j - 1];
        const double size = kind.is_parametric() ? kind.d_star : std::ldexp(1.0, key.k);
        s.lambda[g] = sigma * (std::sqrt(size / n) + std::sqrt(two_log / n));
    }
    return s;
}

Omega0Result omega0_check(const GroupedDesign& design, const Eigen::VectorXd& residual,
                          const PenaltySchedule& schedule)
{
    require(residual.size() == design.n(), "residual length does not match the design");
    require(static_cast<int>(schedule.lambda.size()) == design.num_groups(),
            "schedule does not cover the design groups");
    const double sqrt_n = std::sqrt(static_cast<double>(design.n()));
    Omega0Result out;
    out.worst_ratio = -1.0;
    for (int g = 0; g < design.num_groups(); ++g) {
        const double proj = (design.factor(g).Q.transpose() * residual).norm() / sqrt_n;
        const double lam = schedule.lambda[g];
        double ratio;
        if (lam > 0.0)
            ratio = proj / lam;
        else
            ratio = proj > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.argmax = design.scheme().groups[g];
        }
    }
    out.worst_ratio = std::max(out.worst_ratio, 0.0);
    out.holds = out.worst_ratio <= 1.0;
    return out;
}

double omega0_failure_bound(int p, double eps)
{
    return eps / std::sqrt(2.0 * std::log(p / eps));
}

double complexity_term(double lambda, double fbar_norm)
{
    return std::min(lambda * lambda, lambda * fbar_norm);
}

double complexity_term_normalized(const ResolutionScheme& scheme, const PenaltySchedule& schedule,
                                  int g, double fbar_norm)
{
    const auto key = scheme.groups[g];
    const double d = scheme.dims[g];
    const double delta = key.k > scheme.k_star ? 1.0 : 0.0;
    const double root = std::pow(2.0, delta / 2.0) * std::sqrt(d) +
                        std::sqrt(2.0 * std::log(scheme.p() / schedule.eps));
    const double lam = schedule.lambda[g];
    const double ratio = lam > 0.0 ? std::min(1.0, fbar_norm / lam) : 0.0;
    return root * root * ratio;
}

} // namespace mrgl
