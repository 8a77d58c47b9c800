#include <doctest.h>

#include "instances.hpp"

#include <mrgl/errors.hpp>
#include <mrgl/penalties.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace mrgl;

TEST_SUITE("penalties")
{
    TEST_CASE("penalty levels at the worked values")
    {
        const auto s = make_scheme(10, {}, 100, 1.0);
        const auto sch = penalty_levels(s, 100, 1.0, 1.0);
        const double lam = sch.lambda[s.index_of({1, 4})];
        CHECK(lam == doctest::Approx(0.4 + std::sqrt(2.0 * std::log(10.0) / 100.0)).epsilon(1e-14));
        CHECK(lam == doctest::Approx(0.61460).epsilon(1e-5));
        CHECK(sch.lambda0 == doctest::Approx(std::sqrt(2.0 * std::log(10.0) / 100.0)).epsilon(1e-14));

        // Parametric d* = 1, log(p/eps) = 1.
        const auto t = make_scheme(1, {ComponentKind::parametric(1)}, 100, std::exp(-1.0));
        const auto tp = penalty_levels(t, 100, 1.0, std::exp(-1.0));
        CHECK(tp.lambda[0] == doctest::Approx(0.1 + std::sqrt(0.02)).epsilon(1e-14));
        CHECK(tp.lambda[0] == doctest::Approx(0.24142).epsilon(1e-5));
    }

    TEST_CASE("levels are linear in sigma, scale as n^-1/2 and increase in k")
    {
        const auto s = make_scheme_levels({ComponentKind::nonparametric(), ComponentKind::nonparametric()}, 3, 8);
        const auto a = penalty_levels(s, 400, 1.0, 0.5);
        const auto b = penalty_levels(s, 400, 3.0, 0.5);
        const auto c = penalty_levels(s, 1600, 1.0, 0.5);
        for (int g = 0; g < s.num_groups(); ++g) {
            CHECK(b.lambda[g] == doctest::Approx(3.0 * a.lambda[g]).epsilon(1e-14));
            CHECK(c.lambda[g] == doctest::Approx(0.5 * a.lambda[g]).epsilon(1e-14));
            if (g > 0 && s.groups[g].j == s.groups[g - 1].j) CHECK(a.lambda[g] > a.lambda[g - 1]);
        }
    }

    TEST_CASE("levels stay within twice sigma_n 2^{k/2}")
    {
        const int n = 500;
        const auto s = make_scheme(20, {}, n, 1.0);
        const auto sch = penalty_levels(s, n, 1.3, 1.0);
        const double sigma_n = 1.3 / std::sqrt(n);
        for (int g = 0; g < s.num_groups(); ++g)
            CHECK(sch.lambda[g] <= 2.0 * sigma_n * std::exp2(0.5 * s.groups[g].k));
    }

    TEST_CASE("invalid schedule inputs")
    {
        const auto s = make_scheme_levels({ComponentKind::nonparametric()}, 1, 3);
        CHECK_THROWS_AS(penalty_levels(s, 100, 1.0, 1.0, 1.0), input_error);
        CHECK_THROWS_AS(penalty_levels(s, 100, -1.0, 1.0), input_error);
        CHECK_THROWS_AS(penalty_levels(s, 100, 1.0, 0.0), input_error);
    }

    TEST_CASE("noise majorization on trivial residuals")
    {
        testing::InstanceSpec spec;
        spec.n = 80;
        spec.p = 3;
        spec.levels.k_max = 3;
        const auto inst = testing::make_instance(spec);
        const auto zero = omega0_check(inst.design, Eigen::VectorXd::Zero(spec.n), inst.schedule);
        CHECK(zero.holds);
        CHECK(zero.worst_ratio == 0.0);

        // Residual orthogonal to every block.
        std::mt19937_64 rng(2);
        std::normal_distribution<double> z;
        Eigen::VectorXd v(spec.n);
        for (auto& x : v) x = z(rng);
        const Eigen::MatrixXd U = inst.design.stacked();
        v -= U * U.completeOrthogonalDecomposition().solve(v);
        const auto orth = omega0_check(inst.design, v, inst.schedule);
        CHECK(orth.holds);
        CHECK(orth.worst_ratio < 1e-12);

        // Ratio against a direct computation.
        for (auto& x : v) x = z(rng);
        const auto r = omega0_check(inst.design, v, inst.schedule);
        double worst = 0.0;
        for (int g = 0; g < inst.design.num_groups(); ++g)
            worst = std::max(worst, inst.design.project(g, v).norm() / std::sqrt(spec.n) / inst.schedule.lambda[g]);
        CHECK(r.worst_ratio == doctest::Approx(worst).epsilon(1e-12));
        CHECK(r.holds == (worst <= 1.0));
    }

    TEST_CASE("zero penalty with a nonzero projection reports infinity")
    {
        testing::InstanceSpec spec;
        spec.n = 50;
        const auto inst = testing::make_instance(spec);
        auto sch = inst.schedule;
        sch.lambda[0] = 0.0;
        const auto r = omega0_check(inst.design, Eigen::VectorXd::Ones(spec.n), sch);
        CHECK_FALSE(r.holds);
        CHECK(r.worst_ratio == std::numeric_limits<double>::infinity());
        CHECK(r.argmax == inst.scheme.groups[0]);
    }

    TEST_CASE("failure probability bound")
    {
        CHECK(omega0_failure_bound(8, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::log(8.0))).epsilon(1e-14));
        CHECK(omega0_failure_bound(8, 0.5) == doctest::Approx(0.5 / std::sqrt(2.0 * std::log(16.0))).epsilon(1e-14));
    }

    TEST_CASE("complexity term identity")
    {
        const int n = 300;
        const double sigma = 1.7, eps = 0.4;
        const auto s = make_scheme(5, {ComponentKind::nonparametric(), ComponentKind::parametric(2),
                                       ComponentKind::nonparametric(), ComponentKind::nonparametric(),
                                       ComponentKind::parametric(1)},
                                   n, eps);
        const auto sch = penalty_levels(s, n, sigma, eps);
        std::mt19937_64 rng(4);
        std::exponential_distribution<double> e(10.0);
        for (int g = 0; g < s.num_groups(); ++g)
            for (int t = 0; t < 5; ++t) {
                const double fb = t == 0 ? 0.0 : e(rng);
                const double direct = complexity_term(sch.lambda[g], fb) / (sigma * sigma / n);
                CHECK(complexity_term_normalized(s, sch, g, fb) == doctest::Approx(direct).epsilon(1e-12));
            }
        CHECK(complexity_term(2.0, 1.0) == 2.0);
        CHECK(complexity_term(2.0, 5.0) == 4.0);
    }
}
