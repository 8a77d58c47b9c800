#pragma once
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mrgl::app {

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_nonconvergence = 3,
    exit_certification = 4,
};

struct CommonOptions
{
    std::filesystem::path scenario;       // empty when not given
    std::optional<double> sigma;
    std::optional<double> eps;           // falls back to the scenario, then 1
    double a0 = 2.0;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = ".";
    int threads = 1;
};

struct FitOptions
{
    std::filesystem::path data;
    std::optional<int> k_star;
    std::optional<int> k_max;
    std::optional<double> lambda;  // replaces every lambda_{j,k}
    std::string loss = "squared";
    std::string family;            // empty: scenario family, else fourier
    int max_sweeps = 10000;
    bool write_design = false;
};

struct PredictOptions
{
    std::filesystem::path fit;
    std::filesystem::path data;
};

struct DiagnoseOptions
{
    std::filesystem::path fit;
    std::filesystem::path data;
    std::filesystem::path truth;   // optional truth sidecar for the truncation check
    bool certify = false;          // fail with exit 4 unless the compatibility bound is certified
    double resolution = 1e-3;
    int cc_restarts = 8;           // uncertified estimate, reported only
    int cc_iterations = 10;
    int cc_max_dim = 128;          // skip the estimate above this d*
};

// Each command returns an exit code; config errors propagate as input_error.
int cmd_simulate(const CommonOptions& common);
int cmd_fit(const CommonOptions& common, const FitOptions& opt);
int cmd_predict(const CommonOptions& common, const PredictOptions& opt);
int cmd_diagnose(const CommonOptions& common, const DiagnoseOptions& opt);
int cmd_rates(const CommonOptions& common);

} // namespace mrgl::app
