#pragma once
#include <mrgl_app/io.hpp>

#include <vector>

namespace mrgl::app {

struct RatePoint
{
    int n = 0;
    int replicate = 0;
    int k_max = 0;
    double in_sample = 0.0;       // ||fhat - f*||^2_{2,n}
    double out_of_sample = 0.0;   // Monte-Carlo ||fhat - f*||^2_{L2}
    bool converged = false;
};

struct RateLevel
{
    int n = 0;
    int k_max = 0;
    double median_in = 0.0;
    double mean_in = 0.0;
    double median_out = 0.0;
    double mean_out = 0.0;
    int nonconverged = 0;
};

struct RateStudy
{
    std::vector<RatePoint> points;  // ordered by n, then replicate
    std::vector<RateLevel> levels;
    double slope = 0.0;             // OLS slope of log(median_in) on log(n)
    double stderr_slope = 0.0;
    double slope_out = 0.0;         // same for the out-of-sample medians
    bool degenerate = false;        // zero truth or a non-positive median: slope not reported
    int truth_depth = 0;
};

/// Smallest k with 2^k >= n^{1/(2 alpha_star + 1)}, capped at top_level(n).
int rate_top_level(int n, double alpha_star);

struct LineFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

/// Ordinary least squares y = a + b x; needs at least 3 points.
LineFit ols_line(const std::vector<double>& x, const std::vector<double>& y);

/**
 * Simulate, fit and score every (n, replicate) pair. Tuning is fixed across n:
 * sigma from the scenario, eps and A0 as given. Results do not depend on threads.
 */
RateStudy run_rate_study(const ScenarioFile& file, double A0, int threads,
                         const FitConfig& config = {});

void write_rate_points(const std::filesystem::path& path, const RateStudy& study);
json rate_summary_json(const ScenarioFile& file, const RateStudy& study);

} // namespace mrgl::app
