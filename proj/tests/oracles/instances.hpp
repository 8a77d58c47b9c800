#pragma once
#include <mrgl/basis.hpp>
#include <mrgl/model.hpp>
#include <mrgl/penalties.hpp>

#include <cstdint>
#include <vector>

namespace mrgl::testing {

struct Instance
{
    Scenario scenario;
    SimData data;
    ResolutionScheme scheme;
    GroupedDesign design;
    PenaltySchedule schedule;
};

struct InstanceSpec
{
    int n = 100;
    int p = 2;
    int s0 = 1;
    double alpha = 1.0;
    double sigma = 1.0;
    double eps = 1.0;
    double A0 = 2.0;
    double amplitude = 1.0;
    DesignKind design = DesignKind::IidUniform;
    double correlation = 0.0;
    SchemeOverrides levels;
    std::uint64_t seed = 1;
    std::uint64_t replicate = 0;
};

Instance make_instance(const InstanceSpec& spec);

/// Unfactored design blocks of every group.
std::vector<Eigen::MatrixXd> raw_blocks(const Instance& inst);

/// Equally spaced points (i + 1/2)/n in every column.
Eigen::MatrixXd grid_design(int n, int p);

} // namespace mrgl::testing
