#include <mrgl_app/commands.hpp>

#include <mrgl/errors.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace mrgl::app;

namespace {

void add_common(CLI::App* cmd, CommonOptions& o, bool scenario_required)
{
    auto* sc = cmd->add_option("--scenario", o.scenario, "scenario JSON");
    if (scenario_required) sc->required();
    cmd->add_option("--sigma", o.sigma, "noise level");
    cmd->add_option("--eps", o.eps, "confidence parameter in (0, 1], default 1");
    cmd->add_option("--a0", o.a0, "penalty multiplier A0 > 1")->capture_default_str();
    cmd->add_option("--seed", o.seed, "override the scenario seed");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(
        CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-resolution group lasso for additive models"};
    app.require_subcommand(1);

    CommonOptions common;
    FitOptions fit_opt;
    PredictOptions pred_opt;
    DiagnoseOptions diag_opt;

    auto* sim = app.add_subcommand("simulate", "draw a dataset and its truth from a scenario");
    add_common(sim, common, true);

    auto* fit = app.add_subcommand("fit", "fit a dataset");
    add_common(fit, common, false);
    fit->add_option("--data", fit_opt.data, "dataset CSV")->required();
    fit->add_option("--k-star", fit_opt.k_star, "baseline level override");
    fit->add_option("--k-max", fit_opt.k_max, "top level override");
    fit->add_option("--lambda", fit_opt.lambda, "use this value for every penalty level");
    fit->add_option("--loss", fit_opt.loss, "squared or root")->capture_default_str();
    fit->add_option("--family", fit_opt.family, "fourier or haar");
    fit->add_option("--max-sweeps", fit_opt.max_sweeps, "sweep limit")->capture_default_str();
    fit->add_flag("--write-design", fit_opt.write_design, "also write design.csv");

    auto* pred = app.add_subcommand("predict", "evaluate a stored fit at new covariates");
    add_common(pred, common, false);
    pred->add_option("--fit", pred_opt.fit, "fit JSON")->required();
    pred->add_option("--data", pred_opt.data, "CSV with columns x_1..x_p")->required();

    auto* diag = app.add_subcommand("diagnose", "report bounds and certificates for a fit");
    add_common(diag, common, false);
    diag->add_option("--fit", diag_opt.fit, "fit JSON")->required();
    diag->add_option("--data", diag_opt.data, "dataset CSV")->required();
    diag->add_option("--truth", diag_opt.truth, "truth JSON written by simulate");
    diag->add_flag("--certify", diag_opt.certify, "exit 4 unless the compatibility bound is certified");
    diag->add_option("--resolution", diag_opt.resolution, "certified gap target")->capture_default_str();
    diag->add_option("--cc-restarts", diag_opt.cc_restarts, "restarts of the compatibility estimate")
        ->capture_default_str();
    diag->add_option("--cc-max-dim", diag_opt.cc_max_dim, "largest d* for the compatibility estimate")
        ->capture_default_str();

    auto* rates = app.add_subcommand("rates", "run a rate study over a grid of sample sizes");
    add_common(rates, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*sim) return cmd_simulate(common);
        if (*fit) return cmd_fit(common, fit_opt);
        if (*pred) return cmd_predict(common, pred_opt);
        if (*diag) return cmd_diagnose(common, diag_opt);
        if (*rates) return cmd_rates(common);
    } catch (const mrgl::input_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const mrgl::certification_error& e) {
        std::cerr << "certification failed: " << e.what() << '\n';
        return exit_certification;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
    return exit_config;
}
