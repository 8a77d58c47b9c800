#include <doctest.h>

#include "instances.hpp"
#include "oracles.hpp"

#include <mrgl/errors.hpp>
#include <mrgl/theory.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace mrgl;

namespace {

const double q_grid[] = {0.0, 0.5, 1.0};
const double alpha_grid[] = {0.5, 1.0, 2.0};

bool excluded_line(double q, double alpha0)
{
    return q > 0.0 && std::abs(alpha0 - (1.0 / q - 0.5)) < 1e-12;
}

} // namespace

TEST_SUITE("theory")
{
    TEST_CASE("geometric level sum")
    {
        CHECK(J_c_q(-1.0, 0.0, 0, 2) == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(J_c_q(1.0, 1.0, 0, 3) == doctest::Approx(std::sqrt(1.3125)).epsilon(1e-15));
        for (double c : {-1.0, 0.0, 2.0})
            for (double q : q_grid) CHECK(J_c_q(c, q, 4, 4) == 0.0);
        for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5})
            for (double q : q_grid)
                for (int k1 = 0; k1 <= 6; ++k1)
                    for (int k2 = k1; k2 <= 10; ++k2) {
                        const double ref = oracle::J_bruteforce(c, q, k1, k2);
                        CHECK(std::abs(J_c_q(c, q, k1, k2) - ref) <= 1e-12 * std::max(1.0, ref));
                    }
        CHECK_THROWS_AS(J_c_q(1.0, 1.5, 0, 1), input_error);
        CHECK_THROWS_AS(J_c_q(1.0, 0.5, 3, 1), input_error);
    }

    TEST_CASE("exponent examples")
    {
        const auto a = exponents(0.0, 2.0, 0.0);
        CHECK(a.gamma == doctest::Approx(1.6).epsilon(1e-15));
        CHECK(a.rho == doctest::Approx(0.4).epsilon(1e-15));
        for (double q : q_grid) {
            const auto b = exponents(q, 0.5, 0.0);
            CHECK(b.gamma == 1.0);
            CHECK(b.rho == 1.0);
        }
        CHECK(exponents(1.0, 1.0, 1.0).gamma == doctest::Approx(1.0).epsilon(1e-15));
        CHECK_THROWS_AS(exponents(0.5, 0.4, 0.0), input_error);
        CHECK_THROWS_AS(exponents(0.5, 1.0, 1.5), input_error);
    }

    TEST_CASE("exponent identity, bounds and Hölder split across the grid")
    {
        for (double q : q_grid)
            for (double alpha : alpha_grid)
                for (double alpha0 : {0.0, alpha / 2.0, alpha}) {
                    if (excluded_line(q, alpha0)) continue;
                    const auto b = exponents(q, alpha, alpha0);
                    CHECK(std::abs(b.gamma + q * (1.0 - b.rho) + b.rho - 2.0) <= 1e-12);
                    CHECK(b.gamma >= 1.0 - 1e-12);
                    CHECK(b.gamma <= std::min(4.0 * alpha / (2.0 * alpha + 1.0), 2.0 - q) + 1e-12);
                    CHECK(b.rho >= 0.0);
                    CHECK(b.rho <= 1.0);
                    if (q * (1.0 - b.rho) > 0.0 && std::isfinite(b.q2))
                        CHECK(std::abs(q * (1.0 - b.rho) / b.q2 + b.rho / b.q1 - 1.0) <= 1e-12);
                    if (q == 0.0)
                        CHECK(b.gamma == doctest::Approx(4.0 * alpha / (2.0 * alpha + 1.0)).epsilon(1e-12));
                    if (q == 1.0) CHECK(b.gamma == doctest::Approx(1.0).epsilon(1e-12));
                }
    }

    TEST_CASE("empirical Sobolev norms")
    {
        const std::vector<Eigen::VectorXd> zero(3, Eigen::VectorXd::Zero(10));
        const auto z = empirical_sobolev(zero, 2, 1.0);
        CHECK(z.norm_alpha == 0.0);
        CHECK(z.norm_sobolev == 0.0);

        std::vector<Eigen::VectorXd> one(3, Eigen::VectorXd::Zero(4));
        one[1] = Eigen::VectorXd::Constant(4, 0.3);  // ||.||_{2,n} = 0.3 at k_star + 1
        const auto s = empirical_sobolev(one, 2, 1.5);
        CHECK(s.norm_alpha == doctest::Approx(std::exp2(1.5 * 3) * 0.3).epsilon(1e-14));

        std::mt19937_64 rng(9);
        std::normal_distribution<double> g;
        for (int t = 0; t < 20; ++t) {
            std::vector<Eigen::VectorXd> blocks;
            std::vector<double> norms;
            for (int l = 0; l < 6; ++l) {
                Eigen::VectorXd v(30);
                for (auto& x : v) x = g(rng) * std::exp2(-1.5 * l);
                blocks.push_back(v);
                norms.push_back(norm_n(v));
            }
            const auto e = empirical_sobolev(blocks, 1, 1.2);
            const double ref = oracle::sobolev_sq_bruteforce(norms, 1, 1.2);
            CHECK(std::abs(e.norm_alpha * e.norm_alpha - ref) <= 1e-12 * ref);
            CHECK(std::abs(e.norm_sobolev * e.norm_sobolev - ref - norms[0] * norms[0]) <= 1e-12 * (ref + 1.0));
        }
    }

    TEST_CASE("empirical complexity")
    {
        const int n = 1000, p = 10;
        const auto s = make_scheme(p, {}, n, 1.0);
        const auto sch = penalty_levels(s, n, 1.0, 1.0);
        const int L = s.k_max - s.k_star + 1;
        std::vector<std::vector<Eigen::VectorXd>> blocks(p);
        auto zero = empirical_complexity(blocks, s, sch, 1.0, 0.0, 0.0);
        CHECK(zero.M_alpha_q_n == 0.0);
        CHECK(zero.M_q0_BR_n == 0.0);
        for (double w : zero.weights) {
            CHECK(w > 1.0);
            CHECK(w <= 3.0);
        }

        for (int j : {1, 4, 7}) {
            blocks[j - 1].assign(L, Eigen::VectorXd::Zero(n));
            blocks[j - 1][0] = Eigen::VectorXd::Constant(n, 0.5);
            blocks[j - 1][1] = Eigen::VectorXd::Constant(n, 0.1 * j);
        }
        const auto c = empirical_complexity(blocks, s, sch, 1.0, 0.0, 0.0);
        CHECK(c.M_alpha_q_n == 3.0);
        double br = 0.0;
        for (int j : {1, 4, 7}) br += std::pow(c.weights[j - 1], 2.0);
        CHECK(c.M_q0_BR_n == doctest::Approx(br).epsilon(1e-14));

        const auto c1 = empirical_complexity(blocks, s, sch, 1.0, 1.0, 1.0);
        double sum = 0.0, br1 = 0.0;
        for (int j : {1, 4, 7}) {
            sum += std::exp2(s.k_star + 1) * 0.1 * j;
            br1 += c1.weights[j - 1] * 0.5;
        }
        CHECK(c1.M_alpha_q_n == doctest::Approx(sum).epsilon(1e-12));
        CHECK(c1.M_q0_BR_n == doctest::Approx(br1).epsilon(1e-12));
    }

    TEST_CASE("level-sum bound")
    {
        const int k_star = 1, k_max = 7, L = k_max - k_star + 1;
        const double sigma_n = 0.05;
        std::vector<double> lam(L);
        for (int l = 0; l < L; ++l) lam[l] = sigma_n * std::exp2(0.5 * (k_star + l));

        const auto zero = prop1_bound(std::vector<double>(L, 0.0), sigma_n, lam, exponents(0.0, 1.0, 1.0), k_star, k_max);
        CHECK(zero.lhs == 0.0);
        CHECK(zero.rhs == 0.0);

        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double q : q_grid)
            for (double alpha : alpha_grid)
                for (double alpha0 : {0.0, alpha / 2.0, alpha}) {
                    if (excluded_line(q, alpha0)) continue;
                    const auto b = exponents(q, alpha, alpha0);
                    for (int t = 0; t < 20; ++t) {
                        std::vector<double> norms(L), lk(L);
                        const double scale = std::exp2(8.0 * u(rng) - 6.0);
                        for (int l = 0; l < L; ++l) {
                            norms[l] = scale * u(rng) * std::exp2(-(alpha + 0.5) * (k_star + l));
                            lk[l] = lam[l] * (l == 0 ? 1.0 : u(rng));
                        }
                        const auto r = prop1_bound(norms, sigma_n, lk, b, k_star, k_max);
                        CHECK(r.lhs <= r.rhs * (1.0 + 1e-12));
                    }
                }

        // One dominant block at a level where lambda_k min(., lambda_k) is largest.
        std::vector<double> spike(L, 0.0);
        spike[4] = lam[4];
        const auto sh = prop1_bound(spike, sigma_n, lam, exponents(0.0, 1.0, 1.0), k_star, k_max);
        CHECK(sh.lhs >= 0.1 * sh.rhs);
        CHECK(sh.lhs <= sh.rhs);

        auto bad = lam;
        bad[2] *= 1.5;
        CHECK_THROWS_AS(prop1_bound(spike, sigma_n, bad, exponents(0.0, 1.0, 1.0), k_star, k_max), input_error);
    }

    TEST_CASE("Gram deviation")
    {
        const auto s = make_scheme_levels({ComponentKind::nonparametric()}, 1, 2);
        const auto d = assemble_design(testing::grid_design(16, 1), BasisFamily::Fourier, s);
        CHECK(gram_concentration(d).max_group_deviation < 1e-12);

        // Known population Gram: deviation of a rescaled orthonormal block.
        std::vector<Eigen::MatrixXd> V;
        for (int dim : s.dims) V.push_back(4.0 * Eigen::MatrixXd::Identity(dim, dim));
        CHECK(gram_concentration(d, V).max_group_deviation == doctest::Approx(0.75).epsilon(1e-12));
        V.pop_back();
        CHECK_THROWS_AS(gram_concentration(d, V), input_error);

        auto median_dev = [](int n) {
            std::vector<double> v;
            for (int seed = 0; seed < 11; ++seed) {
                testing::InstanceSpec spec;
                spec.n = n;
                spec.p = 2;
                spec.levels.k_star = 1;
                spec.levels.k_max = 4;
                spec.seed = static_cast<std::uint64_t>(seed);
                v.push_back(gram_concentration(testing::make_instance(spec).design).max_group_deviation);
            }
            std::nth_element(v.begin(), v.begin() + 5, v.end());
            return v[5];
        };
        CHECK(median_dev(256) > median_dev(4096));
    }

    TEST_CASE("concentration sum and cone constant")
    {
        const double c0 = 0.5, L0 = std::sqrt(2.0);
        const double expected = 2.0 * std::exp(-100 * 0.25 / (2.0 * 2.0 * (1.0 + 0.5 / 3.0))) +
                                4.0 * std::exp(-100 * 0.25 / (4.0 * 2.0 * (1.0 + 0.5 / 3.0)));
        CHECK(lemma1_sum({1, 2}, 100, c0, L0) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(lemma1_sum({16}, 4096, c0, L0) < lemma1_sum({16}, 1024, c0, L0));
        CHECK(cone_xi(2.0) == 3.0);
        CHECK_THROWS_AS(cone_xi(1.0), input_error);
    }

    TEST_CASE("oracle inequality right-hand sides")
    {
        const int n = 5;
        PenaltySchedule sch;
        sch.lambda = {0.2, 0.3, 0.4};
        sch.A0 = 2.0;
        std::vector<Eigen::VectorXd> fbar = {Eigen::VectorXd::Constant(n, 0.1), Eigen::VectorXd::Constant(n, 0.2),
                                             Eigen::VectorXd::Zero(n)};
        Eigen::VectorXd fstar = fbar[0] + fbar[1];
        fstar(0) += 0.5;

        Theorem1Inputs in;
        in.fbar_groups = fbar;
        in.f_star = fstar;
        in.S = {false, false, false};
        in.C_pred_S = 7.0;
        in.C_pred_adaptive = 0.5;
        const auto e = theorem1_rhs(in, sch);
        const double approx = 0.25 / n;
        const double pen = 0.2 * 0.1 + 0.3 * 0.2;
        CHECK(e.B_S == 0.0);
        CHECK(e.bound_basic == doctest::Approx(approx + 4.0 * 2.0 * pen).epsilon(1e-14));
        CHECK(e.C_star_pred == 32.0);  // max(8 A0^2, 4 (A0+1)^2 0.5) = max(32, 18)

        in.S = {true, false, true};
        const auto f = theorem1_rhs(in, sch);
        CHECK(f.B_S == doctest::Approx(9.0 * 7.0 * (0.04 + 0.16)).epsilon(1e-14));
        CHECK(f.Delta_S == doctest::Approx(approx + 8.0 * 0.3 * 0.2).epsilon(1e-14));
        CHECK(f.bound_combined == doctest::Approx(4.0 * f.B_S + 2.0 * f.Delta_S).epsilon(1e-14));

        // fbar = f*, every block below threshold: only the penalty terms remain.
        in.f_star = fbar[0] + fbar[1];
        CHECK(adaptive_set(fbar, sch) == std::vector<bool>{false, false, false});
        const auto g = theorem1_rhs(in, sch);
        CHECK(g.bound_S_adaptive == doctest::Approx(32.0 * pen).epsilon(1e-14));
    }

    TEST_CASE("rate bound right-hand side")
    {
        Theorem2Inputs in;
        in.bundle = exponents(0.0, 2.0, 2.0);
        in.k_star = 2;
        in.k_max = 7;
        in.n = 1024;
        in.alpha_star = 0.5;
        in.sigma_n = 1.0 / 32.0;
        in.lambda0 = 0.1;
        in.C_star_pred = 10.0;
        CHECK(theorem2_rhs(in) == 0.0);

        // s0 = 1 with unit complexities: three terms of the q = 0 shape.
        in.M_alpha_q1_n = 1.0;
        in.M_alpha0_q2_n = 1.0;
        in.M_alpha_tail_n = 1.0;
        in.M_q0_BR_n = 1.0;
        const double tail = std::pow(1024.0, -2.0) / 7.5;
        const double level = 4.0 * J_q_alpha_alpha0(in.bundle, 2, 7) * std::pow(1.0 / 32.0, 1.6);
        CHECK(theorem2_rhs(in) == doctest::Approx(tail + 10.0 * (level + 0.01)).epsilon(1e-13));

        in.k_max = 4;  // 2^4 < 1024^{1/2}
        CHECK_THROWS_AS(theorem2_rhs(in), input_error);

        for (double q : q_grid)
            for (int p : {3, 10, 1000})
                for (int n : {16, 1024, 1 << 20}) {
                    const double gamma = 2.0 - q;
                    CHECK(std::pow(n, -gamma / 2.0) <= std::pow(std::log(p) / n, 1.0 - q / 2.0));
                }
    }

    TEST_CASE("truncation constant and tail budget")
    {
        CHECK(C_alpha(1.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
        CHECK(truncation_bound(2.0, 1.0, 3) == doctest::Approx(2.0 / 8.0 / std::sqrt(3.0)).epsilon(1e-15));

        S2Inputs in;
        in.tail_L2_sq = 0.0;
        in.M_alpha_1 = 1.0;
        in.n = 100;
        const auto z = s2_budget(in);
        CHECK(z.s2 == 0.0);

        in.tail_L2_sq = -1.0;
        in.k_max = 0;
        in.alpha = 1.0;
        const auto t = s2_budget(in);
        CHECK(t.tail_L2_sq == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

        in.eps2 = 0.6;  // (1/eps2 - 2)_+ = 0
        const auto c = s2_budget(in);
        CHECK_FALSE(c.first_branch);
        CHECK(c.s2 == doctest::Approx(100.0 * 2.0 / 3.0).epsilon(1e-14));

        in.eps2 = 0.1;
        in.C2_star = 2.0;
        in.M_alpha_2 = 0.5;
        in.k_max = 1;
        const auto d = s2_budget(in);
        CHECK(d.tail_L2_sq == doctest::Approx(2.0 * 0.25 * 0.25).epsilon(1e-15));
        in.eps2 = 1.0;
        CHECK_THROWS_AS(s2_budget(in), input_error);
    }

    TEST_CASE("random-design bound right-hand side")
    {
        const double v = theorem5_rhs(2.0, 0.1, 0.5, 0.8, 1.0, 3.0, 100);
        CHECK(v == doctest::Approx(4.0 * 9.0 * 0.1 / ((0.5 / 1.5) * 0.64) + 2.0 * 3.0 / 100.0).epsilon(1e-14));
        CHECK(theorem5_rhs(2.0, 0.1, 0.5, 0.4, 1.0, 3.0, 100) > v);
        CHECK_THROWS_AS(theorem5_rhs(2.0, 0.1, 0.5, 0.0, 1.0, 3.0, 100), input_error);
    }
}
