#include <mrgl_app/commands.hpp>
#include <mrgl_app/io.hpp>
#include <mrgl_app/rates.hpp>

#include <mrgl/compatibility.hpp>
#include <mrgl/errors.hpp>
#include <mrgl/theory.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

namespace mrgl::app {

namespace {

namespace fs = std::filesystem;

fs::path prepare_out(const CommonOptions& common)
{
    std::error_code ec;
    fs::create_directories(common.out, ec);
    if (ec) throw input_error("cannot create output directory " + common.out.string());
    return common.out;
}

std::optional<ScenarioFile> maybe_scenario(const CommonOptions& common)
{
    if (common.scenario.empty()) return std::nullopt;
    return read_scenario(common.scenario);
}

double effective_eps(const CommonOptions& common, const std::optional<ScenarioFile>& sc)
{
    const double eps = common.eps ? *common.eps : sc ? sc->config.eps : 1.0;
    require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    return eps;
}

void apply_overrides(const CommonOptions& common, ScenarioFile& file)
{
    if (common.sigma) {
        require(*common.sigma >= 0.0, "sigma must be >= 0");
        file.config.sigma = *common.sigma;
    }
    if (common.seed) file.config.seed = *common.seed;
    file.config.eps = effective_eps(common, file);
    require(common.a0 > 1.0, "A0 must exceed 1");
}

std::vector<Eigen::VectorXd> fitted_groups(const GroupedDesign& design,
                                           const std::vector<Eigen::VectorXd>& beta)
{
    std::vector<Eigen::VectorXd> out;
    for (int g = 0; g < design.num_groups(); ++g) out.push_back(design.apply(g, beta[g]));
    return out;
}

// Minimal-norm least-squares coefficients of v on the stacked design, split by group.
std::vector<Eigen::VectorXd> project_on_span(const GroupedDesign& design, const Eigen::VectorXd& v)
{
    const Eigen::MatrixXd U = design.stacked();
    const Eigen::VectorXd b = U.completeOrthogonalDecomposition().solve(v);
    std::vector<Eigen::VectorXd> out;
    const auto& s = design.scheme();
    for (int g = 0; g < s.num_groups(); ++g) out.push_back(b.segment(s.offsets[g], s.dims[g]));
    return out;
}

json truncation_report(const TruthSpec& truth, const Eigen::MatrixXd& X, int k_max)
{
    const ResolutionScheme ts = truth.scheme();
    const int n = static_cast<int>(X.rows());
    json rows = json::array();
    bool all_hold = true;
    for (int j : truth.support) {
        std::vector<Eigen::VectorXd> blocks;
        Eigen::VectorXd full = Eigen::VectorXd::Zero(n), trunc = Eigen::VectorXd::Zero(n);
        for (int k = truth.k_star; k <= truth.depth; ++k) {
            const int g = ts.index_of(GroupKey{j, k});
            Eigen::VectorXd fk = design_block(X, truth.family, ts, g) * truth.block(j, k);
            full += fk;
            if (k <= k_max) trunc += fk;
            blocks.push_back(std::move(fk));
        }
        const double alpha = truth.alpha[j - 1];
        const double lhs = norm_n(full - trunc);
        const double rhs = truncation_bound(empirical_sobolev(blocks, truth.k_star, alpha).norm_alpha,
                                            alpha, k_max);
        const bool holds = lhs <= rhs * (1.0 + 1e-12) + 1e-15;
        all_hold = all_hold && holds;
        rows.push_back({{"component", j}, {"alpha", alpha}, {"lhs", lhs}, {"rhs", rhs}, {"holds", holds}});
    }
    return {{"components", rows}, {"all_hold", all_hold}};
}

} // namespace

int cmd_simulate(const CommonOptions& common)
{
    require(!common.scenario.empty(), "simulate needs --scenario");
    ScenarioFile file = read_scenario(common.scenario);
    apply_overrides(common, file);
    require(file.config.n >= 2, "scenario needs n");
    const Scenario sc = make_scenario(file.config);
    const SimData data = simulate(sc);
    const fs::path out = prepare_out(common);

    const fs::path data_path = out / "data.csv";
    const fs::path truth_path = out / "truth.json";
    write_dataset(data_path, data);
    json sidecar;
    sidecar["scenario"] = {{"n", sc.n},
                           {"p", file.config.p},
                           {"s0", file.config.s0},
                           {"sigma", sc.sigma},
                           {"design", to_string(sc.design)},
                           {"correlation", sc.correlation},
                           {"seed", sc.seed},
                           {"eps", file.config.eps}};
    sidecar["truth"] = truth_to_json(sc.truth);
    write_json(truth_path, sidecar);

    std::cout << file_digest(data_path) << "  " << data_path.string() << '\n'
              << file_digest(truth_path) << "  " << truth_path.string() << '\n';
    return exit_ok;
}

int cmd_fit(const CommonOptions& common, const FitOptions& opt)
{
    require(!opt.data.empty(), "fit needs --data");
    const auto scenario = maybe_scenario(common);
    const Dataset data = read_dataset(opt.data);
    require(data.has_y, opt.data.string() + ": no y column");
    require(common.a0 > 1.0, "A0 must exceed 1");
    const double eps = effective_eps(common, scenario);
    const int n = static_cast<int>(data.X.rows());
    const int p = static_cast<int>(data.X.cols());
    require(!scenario || scenario->config.p == p, "scenario p does not match the dataset");
    for (Eigen::Index i = 0; i < data.X.size(); ++i) {
        const double v = data.X.data()[i];
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "covariates must lie in [0, 1]");
    }
    const BasisFamily family = !opt.family.empty() ? parse_basis_family(opt.family)
                               : scenario            ? scenario->config.family
                                                     : BasisFamily::Fourier;

    SchemeOverrides ov;
    ov.k_star = opt.k_star;
    ov.k_max = opt.k_max;
    const ResolutionScheme scheme = make_scheme(p, {}, n, eps, ov);
    AssembleOptions aopt;
    aopt.threads = common.threads;
    const GroupedDesign design = assemble_design(data.X, family, scheme, aopt);

    std::string sigma_source = "flag";
    double sigma = 0.0;
    if (common.sigma) {
        sigma = *common.sigma;
    } else if (scenario) {
        sigma = scenario->config.sigma;
        sigma_source = "scenario";
    } else {
        sigma = estimate_sigma(data.y, design, eps, common.a0);
        sigma_source = "estimated";
    }
    require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be >= 0");
    PenaltySchedule schedule = penalty_levels(scheme, n, sigma, eps, common.a0);
    if (opt.lambda) {
        require(*opt.lambda >= 0.0, "lambda override must be >= 0");
        std::fill(schedule.lambda.begin(), schedule.lambda.end(), *opt.lambda);
    }

    FitConfig cfg;
    cfg.loss = parse_loss(opt.loss);
    cfg.max_sweeps = opt.max_sweeps;
    const FitResult f = fit(data.y, design, schedule, cfg);

    const fs::path out = prepare_out(common);
    json j = fit_to_json(f, schedule, cfg.loss);
    j["n"] = n;
    j["sigma_source"] = sigma_source;
    j["overrides"] = {{"k_star", opt.k_star ? json(*opt.k_star) : json(nullptr)},
                      {"k_max", opt.k_max ? json(*opt.k_max) : json(nullptr)},
                      {"lambda", opt.lambda ? json(*opt.lambda) : json(nullptr)}};
    write_json(out / "fit.json", j);
    write_vector_csv(out / "fitted.csv", "fitted", f.fitted);
    if (opt.write_design) {
        std::ofstream os(out / "design.csv", std::ios::binary);
        if (!os) throw input_error("cannot write " + (out / "design.csv").string());
        write_design_csv(os, design);
    }

    std::cout << "groups " << scheme.num_groups() << ", active " << f.active_set.size()
              << ", sweeps " << f.sweeps << ", converged " << (f.converged ? "yes" : "no") << '\n'
              << "kkt inactive_max_ratio " << f.kkt.inactive_max_ratio << " ("
              << to_string(f.kkt.worst_inactive) << "), active_max_violation "
              << f.kkt.active_max_violation << " (" << to_string(f.kkt.worst_active) << ")\n";
    return f.converged ? exit_ok : exit_nonconvergence;
}

int cmd_predict(const CommonOptions& common, const PredictOptions& opt)
{
    require(!opt.fit.empty() && !opt.data.empty(), "predict needs --fit and --data");
    const StoredFit stored = fit_from_json(read_json(opt.fit));
    const Dataset data = read_dataset(opt.data);
    require(data.X.cols() == stored.fit.scheme.p(), "dataset p does not match the fit");
    const Prediction pr = predict(stored.fit, stored.fit.family, stored.fit.scheme, data.X);
    const fs::path out = prepare_out(common);
    const fs::path path = out / "predictions.csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("cannot write " + path.string());
    os << "f_hat";
    for (Eigen::Index c = 0; c < pr.per_component.cols(); ++c) os << ",f_" << c + 1;
    os << '\n';
    for (Eigen::Index i = 0; i < pr.f_hat.size(); ++i) {
        os << format_double(pr.f_hat(i));
        for (Eigen::Index c = 0; c < pr.per_component.cols(); ++c)
            os << ',' << format_double(pr.per_component(i, c));
        os << '\n';
    }
    std::cout << "wrote " << pr.f_hat.size() << " predictions to " << path.string() << '\n';
    return exit_ok;
}

int cmd_diagnose(const CommonOptions& common, const DiagnoseOptions& opt)
{
    require(!opt.fit.empty() && !opt.data.empty(), "diagnose needs --fit and --data");
    const StoredFit stored = fit_from_json(read_json(opt.fit));
    const Dataset data = read_dataset(opt.data);
    require(data.has_y, opt.data.string() + ": no y column");
    const auto& scheme = stored.fit.scheme;
    require(data.X.cols() == scheme.p(), "dataset p does not match the fit");
    const int n = static_cast<int>(data.X.rows());
    AssembleOptions aopt;
    aopt.threads = common.threads;
    const GroupedDesign design = assemble_design(data.X, stored.fit.family, scheme, aopt);
    const PenaltySchedule& schedule = stored.schedule;
    const int G = scheme.num_groups();

    FitResult f = stored.fit;
    f.fitted_groups = fitted_groups(design, f.beta);
    f.fitted = Eigen::VectorXd::Zero(n);
    for (const auto& v : f.fitted_groups) f.fitted += v;

    json rep;
    rep["n"] = n;
    rep["d_star"] = scheme.total_dim();
    rep["kkt"] = kkt_to_json(kkt_check(data.y, design, schedule, f, stored.loss));

    const GramDeviation gd = gram_concentration(design);
    std::vector<int> dims(scheme.dims.begin(), scheme.dims.end());
    const double c0 = 0.5;
    const double L0 = sup_bound(stored.fit.family, scheme);
    rep["gram"] = {{"max_group_deviation", gd.max_group_deviation},
                   {"per_group", gd.per_group},
                   {"c0", c0},
                   {"L0", L0},
                   {"concentration_failure_bound", lemma1_sum(dims, n, c0, L0)}};

    const double xi = cone_xi(schedule.A0);
    rep["xi"] = xi;
    rep["omega0_failure_bound"] = omega0_failure_bound(scheme.p(), schedule.eps);

    // Support for the compatibility bound: the adaptive set of the projected truth when
    // f_star is known, otherwise the fitted active set.
    std::vector<Eigen::VectorXd> fbar;
    std::vector<bool> S(G, false);
    if (data.has_f_star) {
        const auto b = project_on_span(design, data.f_star);
        fbar = fitted_groups(design, b);
        S = adaptive_set(fbar, schedule);
        const Omega0Result om = omega0_check(design, data.y - data.f_star, schedule);
        rep["omega0"] = {{"holds", om.holds},
                         {"worst_ratio", std::isfinite(om.worst_ratio) ? json(om.worst_ratio) : json("inf")},
                         {"argmax", to_string(om.argmax)}};
    } else {
        for (int g = 0; g < G; ++g) S[g] = f.beta[g].squaredNorm() > 0.0;
        rep["omega0"] = nullptr;
    }
    json sj = json::array();
    bool anyS = false;
    for (int g = 0; g < G; ++g)
        if (S[g]) {
            sj.push_back(to_string(scheme.groups[g]));
            anyS = true;
        }
    rep["S"] = sj;

    double C_pred = 0.0;
    CcOptions copt;
    copt.resolution = opt.resolution;
    bool certified = scheme.total_dim() <= copt.max_dim;
    if (opt.certify && !certified)
        throw certification_error("d* = " + std::to_string(scheme.total_dim()) +
                                  " exceeds the certification limit of " + std::to_string(copt.max_dim));
    json cc;
    if (anyS) {
        const CcProblem P = cc_problem_penalty(design, schedule.lambda, S, xi);
        const bool estimate = scheme.total_dim() <= opt.cc_max_dim;
        const double est = estimate ? cc_estimate(P, opt.cc_restarts, opt.cc_iterations)
                                    : std::numeric_limits<double>::quiet_NaN();
        cc["kappa_estimate"] = estimate ? json(est) : json(nullptr);
        if (certified) {
            const CcResult r = cc_bruteforce(P, copt);
            const CpredBounds cp = c_pred_bounds(P, 8, copt);
            cc["kappa_certified"] = r.kappa;
            cc["kappa_upper"] = r.kappa_upper;
            cc["c_pred_lower"] = cp.lower;
            cc["c_pred_upper"] = cp.upper;
            certified = r.certified && cp.certified;
            C_pred = cp.upper;
        } else {
            C_pred = estimate && est > 0.0 ? 1.0 / (est * est)
                                           : std::numeric_limits<double>::infinity();
        }
    }
    cc["certified"] = certified;
    rep["compatibility"] = cc;
    if (opt.certify && !certified)
        throw certification_error("compatibility bound could not be certified");

    if (data.has_f_star && std::isfinite(C_pred)) {
        Theorem1Inputs in;
        in.fbar_groups = fbar;
        in.f_star = data.f_star;
        in.S = S;
        in.C_pred_S = C_pred;
        in.C_pred_adaptive = C_pred;
        const Theorem1Bounds tb = theorem1_rhs(in, schedule);
        Eigen::VectorXd fb = Eigen::VectorXd::Zero(n);
        for (const auto& v : fbar) fb += v;
        // bound_basic covers the prediction error; the other two cover the two-term sum.
        const double pred = std::pow(norm_n(f.fitted - data.f_star), 2);
        const double lhs = std::pow(norm_n(f.fitted - fb), 2) + pred;
        rep["oracle"] = {{"prediction_error", pred},
                         {"lhs", lhs},
                         {"bound_basic", tb.bound_basic},
                         {"bound_combined", tb.bound_combined},
                         {"bound_adaptive", tb.bound_S_adaptive},
                         {"C_star_pred", tb.C_star_pred},
                         {"certified", certified}};
    }

    if (!opt.truth.empty()) {
        const json tj = read_json(opt.truth);
        const TruthSpec truth = truth_from_json(tj.contains("truth") ? tj.at("truth") : tj);
        require(truth.p == scheme.p(), "truth p does not match the fit");
        rep["truncation"] = truncation_report(truth, data.X, scheme.k_max);
    }

    const fs::path out = prepare_out(common);
    write_json(out / "diagnostics.json", rep);
    std::cout << "wrote " << (out / "diagnostics.json").string() << '\n';
    return exit_ok;
}

int cmd_rates(const CommonOptions& common)
{
    require(!common.scenario.empty(), "rates needs --scenario");
    ScenarioFile file = read_scenario(common.scenario);
    apply_overrides(common, file);
    require(file.n_grid.size() >= 3, "rates needs n_grid with at least 3 sample sizes");
    const RateStudy study = run_rate_study(file, common.a0, common.threads);
    const fs::path out = prepare_out(common);
    write_rate_points(out / "rates_points.csv", study);
    const json summary = rate_summary_json(file, study);
    write_json(out / "rates_summary.json", summary);
    for (const auto& lv : study.levels)
        std::cout << "n " << lv.n << "  k_max " << lv.k_max << "  median " << lv.median_in
                  << "  oos " << lv.median_out << '\n';
    if (study.degenerate)
        std::cout << "degenerate study: slope not reported\n";
    else
        std::cout << "slope " << study.slope << " (stderr " << study.stderr_slope << ")\n";
    return exit_ok;
}

} // namespace mrgl::app
