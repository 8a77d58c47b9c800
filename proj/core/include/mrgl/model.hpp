#pragma once
#include <mrgl/basis.hpp>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace mrgl {

struct FitResult;

/// Ground-truth additive function stored as coefficient blocks up to level `depth`.
struct TruthSpec
{
    int p = 0;
    int k_star = 0;
    int depth = 0;
    BasisFamily family = BasisFamily::Fourier;
    std::vector<int> support;                       // active components, ascending, 1-based
    std::vector<double> alpha;                      // per component; 0 for inactive
    std::vector<std::vector<Eigen::VectorXd>> coeffs;  // [j-1][k-k_star]; empty when inactive
    // Generator constants, used for the tail bound of the infinite sequence.
    std::vector<double> scale;                      // c_j
    double g_max = 1.0;

    bool active(int j) const { return !coeffs[j - 1].empty(); }
    /// Scheme spanning levels k_star..depth with nonparametric components.
    ResolutionScheme scheme() const;
    /// beta*_{j,k}; zero vector of the right size for inactive components.
    Eigen::VectorXd block(int j, int k) const;
};

struct TruthOptions
{
    double amplitude = 1.0;      // ||beta*_{j,k_star}||_2 before the g factor
    bool random_scale = false;   // g_{j,k} ~ U[0.5, 1.5] instead of 1
    bool random_support = true;  // support drawn from the seed; else 1..s0
};

/**
 * Coefficients with ||beta*_{j,k}||_2 = c_j 2^{-(alpha+1/2)k} g_{j,k} and a uniform
 * random direction per block. c_j = amplitude * 2^{(alpha+1/2) k_star}.
 */
TruthSpec make_truth(int p, int s0, double alpha, int k_star, int depth, std::uint64_t seed,
                     const TruthOptions& opt = {}, BasisFamily family = BasisFamily::Fourier);

/// Truth with explicit coefficient blocks (no generator; tail bound is zero).
TruthSpec make_truth_from_blocks(int p, int k_star, int depth,
                                 std::vector<std::vector<Eigen::VectorXd>> coeffs,
                                 BasisFamily family = BasisFamily::Fourier);

enum class DesignKind { IidUniform, CorrelatedUniform };

struct Scenario
{
    int n = 0;
    DesignKind design = DesignKind::IidUniform;
    double correlation = 0.0;  // AR(1) correlation of the Gaussian copula
    double sigma = 1.0;
    TruthSpec truth;
    std::uint64_t seed = 0;
};

/// Flat configuration as read from scenario files.
struct ScenarioConfig
{
    int n = 0;
    int p = 1;
    int s0 = 0;
    double alpha = 1.0;
    double sigma = 1.0;
    DesignKind design = DesignKind::IidUniform;
    double correlation = 0.0;
    std::uint64_t seed = 0;
    int depth = -1;             // -1: top_level(n) + 4
    double eps = 1.0;
    int k_star = -1;            // -1: baseline rule
    TruthOptions truth;
    BasisFamily family = BasisFamily::Fourier;
};

Scenario make_scenario(const ScenarioConfig& cfg);

struct SimData
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd f_star;
    /// Per component, an n x L matrix whose column l is f*_{j,k_star+l}; empty when inactive.
    std::vector<Eigen::MatrixXd> levels;
    int k_star = 0;

    /// f*_{j,k} as realized on the sample (zero for inactive j or k > depth).
    Eigen::VectorXd component(int j, int k) const;
};

/// Independent, reproducible stream for (seed, replicate, purpose).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t purpose);

Eigen::MatrixXd draw_design(const Scenario& sc, int m, std::mt19937_64& rng);
Eigen::VectorXd evaluate_truth(const TruthSpec& truth, const Eigen::MatrixXd& X);

SimData simulate(const Scenario& sc, std::uint64_t replicate = 0);
/// Simulate with a given design matrix (noise still drawn from the scenario stream).
SimData simulate_on(const Scenario& sc, const Eigen::MatrixXd& X, std::uint64_t replicate = 0);

struct SobolevNorms
{
    double norm_alpha = 0.0;
    double norm_sobolev = 0.0;
    double tail_bound = 0.0;  // bound on the squared norm of the generator beyond depth
};

SobolevNorms population_sobolev(const TruthSpec& truth, int j, double alpha);

/// Special q values; q = 0 gives counts, q = inf gives maxima.
inline constexpr double q_inf = std::numeric_limits<double>::infinity();

struct Complexity
{
    double M_alpha_q = 0.0;  // aggregate of ||f*_j||_{alpha,2}
    double M_q_BR = 0.0;     // aggregate of ||beta*_{j,k_star}||_2
};

/**
 * l_q aggregate of per-component values: count for q = 0, max for q = inf,
 * (sum v^q)^{1/q} otherwise.
 */
double lq_aggregate(const std::vector<double>& values, double q);
/// The q-th power of an aggregate, with the count convention at q = 0.
double lq_power(double aggregate, double q);

Complexity population_complexity(const TruthSpec& truth, double alpha, double q);

struct OutOfSample
{
    double error = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of ||fhat - f*||^2_{L2} on m fresh design rows.
OutOfSample out_of_sample_error(const FitResult& fit, const GroupedDesign& design,
                                const Scenario& sc, int m, std::uint64_t seed);

} // namespace mrgl
