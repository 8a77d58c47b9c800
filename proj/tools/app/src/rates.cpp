#include <mrgl_app/rates.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace mrgl::app {

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

json number_or_null(double v, bool valid)
{
    return valid && std::isfinite(v) ? json(v) : json(nullptr);
}

} // namespace

int rate_top_level(int n, double alpha_star)
{
    require(n >= 2, "n must be >= 2");
    require(alpha_star > 0.0, "alpha_star must be positive");
    const double target = std::pow(static_cast<double>(n), 1.0 / (2.0 * alpha_star + 1.0));
    int k = 0;
    while (std::ldexp(1.0, k) < target) ++k;
    return std::min(k, top_level(n));
}

LineFit ols_line(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size(), "x and y differ in length");
    require(x.size() >= 3, "a slope needs at least 3 points");
    const double m = static_cast<double>(x.size());
    const double xm = mean(x);
    const double ym = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    require(sxx > 0.0, "x values must not all coincide");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        rss += e * e;
    }
    f.stderr_slope = std::sqrt(rss / (m - 2.0) / sxx);
    return f;
}

RateStudy run_rate_study(const ScenarioFile& file, double A0, int threads, const FitConfig& config)
{
    require(file.n_grid.size() >= 3, "rate study needs at least 3 grid points");
    for (std::size_t i = 1; i < file.n_grid.size(); ++i)
        require(file.n_grid[i] > file.n_grid[i - 1], "n_grid must be strictly increasing");
    require(file.replicates >= 1, "replicates must be >= 1");

    // One truth for the whole grid, deep enough for the largest n.
    ScenarioConfig base = file.config;
    const int k_star = base.k_star >= 0 ? base.k_star : baseline_level(base.p, base.eps);
    if (base.depth < 0) base.depth = std::max(top_level(file.n_grid.back()), k_star) + 4;
    base.n = file.n_grid.back();

    RateStudy study;
    study.truth_depth = base.depth;
    const int R = file.replicates;
    const int N = static_cast<int>(file.n_grid.size());
    study.points.resize(static_cast<std::size_t>(N) * R);

    std::vector<Scenario> scenarios;
    for (int n : file.n_grid) {
        ScenarioConfig cfg = base;
        cfg.n = n;
        scenarios.push_back(make_scenario(cfg));
    }

    auto task = [&](int idx) {
        const int i = idx / R;
        const int r = idx % R;
        const Scenario& sc = scenarios[i];
        const int n = sc.n;
        const SimData data = simulate(sc, static_cast<std::uint64_t>(r));
        SchemeOverrides ov;
        ov.k_star = k_star;
        ov.k_max = std::max(k_star, rate_top_level(n, file.alpha_star));
        const ResolutionScheme scheme = make_scheme(base.p, {}, n, base.eps, ov);
        const GroupedDesign design = assemble_design(data.X, base.family, scheme);
        const PenaltySchedule schedule = penalty_levels(scheme, n, base.sigma, base.eps, A0);
        const FitResult f = fit(data.y, design, schedule, config);
        RatePoint& pt = study.points[static_cast<std::size_t>(idx)];
        pt.n = n;
        pt.replicate = r;
        pt.k_max = scheme.k_max;
        pt.in_sample = (f.fitted - data.f_star).squaredNorm() / n;
        pt.out_of_sample =
            out_of_sample_error(f, design, sc, file.oos_samples,
                                sc.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(idx + 1)))
                .error;
        pt.converged = f.converged;
    };

    const int total = N * R;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int idx = next++; idx < total; idx = next++) task(idx);
    };
    const int nt = std::clamp(threads, 1, total);
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    }

    bool zero_truth = scenarios.front().truth.support.empty();
    std::vector<double> logn, login, logout;
    for (int i = 0; i < N; ++i) {
        RateLevel lv;
        lv.n = file.n_grid[i];
        std::vector<double> in, out;
        for (int r = 0; r < R; ++r) {
            const RatePoint& pt = study.points[static_cast<std::size_t>(i) * R + r];
            in.push_back(pt.in_sample);
            out.push_back(pt.out_of_sample);
            lv.k_max = pt.k_max;
            if (!pt.converged) ++lv.nonconverged;
        }
        lv.median_in = median(in);
        lv.mean_in = mean(in);
        lv.median_out = median(out);
        lv.mean_out = mean(out);
        study.levels.push_back(lv);
        logn.push_back(std::log(static_cast<double>(lv.n)));
        login.push_back(std::log(lv.median_in));
        logout.push_back(std::log(lv.median_out));
        if (!(lv.median_in > 0.0) || !(lv.median_out > 0.0)) zero_truth = true;
    }
    study.degenerate = zero_truth;
    if (study.degenerate) {
        study.slope = study.stderr_slope = study.slope_out = std::numeric_limits<double>::quiet_NaN();
    } else {
        const LineFit in_fit = ols_line(logn, login);
        study.slope = in_fit.slope;
        study.stderr_slope = in_fit.stderr_slope;
        study.slope_out = ols_line(logn, logout).slope;
    }
    return study;
}

void write_rate_points(const std::filesystem::path& path, const RateStudy& study)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << "n,replicate,k_max,in_sample,out_of_sample,converged\n";
    for (const auto& pt : study.points)
        out << pt.n << ',' << pt.replicate << ',' << pt.k_max << ',' << format_double(pt.in_sample)
            << ',' << format_double(pt.out_of_sample) << ',' << (pt.converged ? 1 : 0) << '\n';
}

json rate_summary_json(const ScenarioFile& file, const RateStudy& study)
{
    const bool ok = !study.degenerate;
    json j;
    j["slope"] = number_or_null(study.slope, ok);
    j["stderr"] = number_or_null(study.stderr_slope, ok);
    j["slope_out_of_sample"] = number_or_null(study.slope_out, ok);
    j["target_exponent"] = file.has_target ? json(file.target_exponent) : json(nullptr);
    j["degenerate"] = study.degenerate;
    j["replicates"] = file.replicates;
    j["alpha_star"] = file.alpha_star;
    j["truth_depth"] = study.truth_depth;
    json levels = json::array();
    for (const auto& lv : study.levels)
        levels.push_back({{"n", lv.n}, {"k_max", lv.k_max}, {"median_in_sample", lv.median_in},
                          {"mean_in_sample", lv.mean_in}, {"median_out_of_sample", lv.median_out},
                          {"mean_out_of_sample", lv.mean_out}, {"nonconverged", lv.nonconverged}});
    j["levels"] = levels;
    return j;
}

} // namespace mrgl::app
