#pragma once
#include <mrgl/basis.hpp>
#include <mrgl/model.hpp>
#include <mrgl/penalties.hpp>
#include <mrgl/solver.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mrgl::app {

using json = nlohmann::json;

/// Parsed scenario file plus the fields used only by the rate study.
struct ScenarioFile
{
    ScenarioConfig config;
    std::vector<int> n_grid;
    int replicates = 20;
    double target_exponent = 0.0;
    bool has_target = false;
    double alpha_star = 0.25;  // top level rule 2^k_max >= n^{1/(2 alpha_star + 1)}
    int oos_samples = 2000;
};

/// Reads a scenario JSON; errors carry the line of the offending token or key.
ScenarioFile read_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario(const std::string& text);

std::string to_string(DesignKind d);
DesignKind parse_design_kind(const std::string& s);

struct Dataset
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd f_star;
    bool has_y = false;
    bool has_f_star = false;
};

/// Columns x_1..x_p, then optional y and f_star.
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const SimData& data);

json truth_to_json(const TruthSpec& truth);
TruthSpec truth_from_json(const json& j);

json schedule_to_json(const ResolutionScheme& scheme, const PenaltySchedule& schedule);
json kkt_to_json(const KktReport& kkt);
json fit_to_json(const FitResult& fit, const PenaltySchedule& schedule, LossVariant loss);

/// Fit as read back from JSON: scheme, coefficients and the recorded schedule.
struct StoredFit
{
    FitResult fit;
    PenaltySchedule schedule;
    LossVariant loss = LossVariant::SquaredHalf;
};
StoredFit fit_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_vector_csv(const std::filesystem::path& path, const std::string& header,
                      const Eigen::VectorXd& v);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

LossVariant parse_loss(const std::string& s);
std::string to_string(LossVariant loss);

} // namespace mrgl::app
