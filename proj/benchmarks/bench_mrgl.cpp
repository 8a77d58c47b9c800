#include <mrgl/compatibility.hpp>
#include <mrgl/model.hpp>
#include <mrgl/penalties.hpp>
#include <mrgl/solver.hpp>

#include <benchmark/benchmark.h>

#include <cmath>

using namespace mrgl;

namespace {

struct Problem
{
    SimData data;
    ResolutionScheme scheme;
    PenaltySchedule schedule;
};

Problem make_problem(int n, int p, int s0, std::uint64_t seed = 1)
{
    ScenarioConfig c;
    c.n = n;
    c.p = p;
    c.s0 = s0;
    c.alpha = 1.5;
    c.sigma = 1.0;
    c.seed = seed;
    c.truth.amplitude = 2.0;
    Problem out;
    out.data = simulate(make_scenario(c));
    // Top level from 2^k >= n^(2/3), the rule the rate study uses with alpha_* = 1/4.
    SchemeOverrides ov;
    ov.k_max = static_cast<int>(std::ceil(std::log2(std::pow(n, 2.0 / 3.0)) - 1e-12));
    out.scheme = make_scheme(p, {}, n, 1.0, ov);
    out.schedule = penalty_levels(out.scheme, n, 1.0, 1.0);
    return out;
}

void BM_AssembleDesign(benchmark::State& state)
{
    const auto pr = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 3);
    AssembleOptions opt;
    opt.threads = static_cast<int>(state.range(2));
    for (auto _ : state) {
        auto d = assemble_design(pr.data.X, BasisFamily::Fourier, pr.scheme, opt);
        benchmark::DoNotOptimize(d);
    }
    state.counters["d_star"] = pr.scheme.total_dim();
}
BENCHMARK(BM_AssembleDesign)->Args({200, 20, 1})->Args({1024, 50, 1})->Args({4096, 50, 1})->Args({4096, 50, 2})
    ->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state)
{
    const auto pr = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 3);
    const auto design = assemble_design(pr.data.X, BasisFamily::Fourier, pr.scheme);
    for (auto _ : state) {
        auto f = fit(pr.data.y, design, pr.schedule);
        benchmark::DoNotOptimize(f.fitted.data());
    }
}
BENCHMARK(BM_Fit)->Args({200, 20})->Args({1024, 50})->Args({4096, 50})->Unit(benchmark::kMillisecond);

void BM_FitWarmStart(benchmark::State& state)
{
    const auto pr = make_problem(1024, 50, 3);
    const auto design = assemble_design(pr.data.X, BasisFamily::Fourier, pr.scheme);
    auto looser = pr.schedule;
    for (auto& l : looser.lambda) l *= 1.25;
    const auto start = fit(pr.data.y, design, looser);
    for (auto _ : state) {
        auto f = fit(pr.data.y, design, pr.schedule, {}, &start);
        benchmark::DoNotOptimize(f.fitted.data());
    }
}
BENCHMARK(BM_FitWarmStart)->Unit(benchmark::kMillisecond);

void BM_NoiseEventCheck(benchmark::State& state)
{
    const auto pr = make_problem(256, 8, 3);
    const auto design = assemble_design(pr.data.X, BasisFamily::Fourier, pr.scheme);
    const Eigen::VectorXd noise = pr.data.y - pr.data.f_star;
    for (auto _ : state) benchmark::DoNotOptimize(omega0_check(design, noise, pr.schedule));
}
BENCHMARK(BM_NoiseEventCheck);

void BM_CompatibilityCertified(benchmark::State& state)
{
    ScenarioConfig c;
    c.n = 40;
    c.p = 1;
    c.s0 = 1;
    c.eps = 0.5;
    c.sigma = 1.0;
    c.seed = 3;
    const auto data = simulate(make_scenario(c));
    SchemeOverrides ov;
    ov.k_star = 1;
    ov.k_max = 2;
    const auto scheme = make_scheme(1, {}, 40, 0.5, ov);
    const auto design = assemble_design(data.X, BasisFamily::Fourier, scheme);
    const auto sch = penalty_levels(scheme, 40, 1.0, 0.5);
    const auto P = cc_problem_penalty(design, sch.lambda, {true, false}, 3.0);
    CcOptions opt;
    opt.resolution = std::ldexp(1.0, -static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cc_bruteforce(P, opt));
}
BENCHMARK(BM_CompatibilityCertified)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
