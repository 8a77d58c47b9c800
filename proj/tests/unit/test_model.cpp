#include <doctest.h>

#include "instances.hpp"

#include <mrgl/errors.hpp>
#include <mrgl/model.hpp>
#include <mrgl/solver.hpp>
#include <mrgl/theory.hpp>

#include <cmath>

using namespace mrgl;

namespace {

ScenarioConfig base_config()
{
    ScenarioConfig c;
    c.n = 200;
    c.p = 4;
    c.s0 = 2;
    c.alpha = 1.5;
    c.sigma = 0.7;
    c.seed = 11;
    return c;
}

// One active component with a single nonzero block at level k.
TruthSpec single_block_truth(int p, int k_star, int depth, int j, int k, double norm)
{
    std::vector<std::vector<Eigen::VectorXd>> coeffs(p);
    for (int kk = k_star; kk <= depth; ++kk) {
        const int d = 1 << std::max(kk - 1, k_star);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
        if (kk == k) b(0) = norm;
        coeffs[j - 1].push_back(b);
    }
    return make_truth_from_blocks(p, k_star, depth, std::move(coeffs));
}

} // namespace

TEST_SUITE("model")
{
    TEST_CASE("noiseless scenario returns the truth")
    {
        auto c = base_config();
        c.sigma = 0.0;
        const auto d = simulate(make_scenario(c));
        CHECK(d.y == d.f_star);
    }

    TEST_CASE("same seed reproduces the data bit for bit")
    {
        const auto sc = make_scenario(base_config());
        const auto a = simulate(sc, 3);
        const auto b = simulate(sc, 3);
        CHECK(a.X == b.X);
        CHECK(a.y == b.y);
        const auto c = simulate(sc, 4);
        CHECK(a.X != c.X);
    }

    TEST_CASE("zero truth leaves pure standard noise")
    {
        auto c = base_config();
        c.s0 = 0;
        c.sigma = 1.0;
        c.n = 10000;
        const auto d = simulate(make_scenario(c));
        CHECK(d.f_star.isZero());
        const double mean = d.y.mean();
        const double var = (d.y.array() - mean).square().sum() / (c.n - 1);
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(c.n));
        CHECK(std::abs(var - 1.0) <= 0.1);
    }

    TEST_CASE("invalid scenarios are rejected")
    {
        auto c = base_config();
        c.sigma = -1.0;
        CHECK_THROWS_AS(make_scenario(c), input_error);
        c = base_config();
        c.s0 = 5;
        CHECK_THROWS_AS(make_scenario(c), input_error);
        c = base_config();
        c.design = DesignKind::CorrelatedUniform;
        c.correlation = 1.0;
        CHECK_THROWS_AS(make_scenario(c), input_error);
    }

    TEST_CASE("truth coefficients follow the decay rule")
    {
        TruthOptions opt;
        opt.amplitude = 2.0;
        const auto t = make_truth(6, 3, 1.5, 2, 9, 17, opt);
        CHECK(t.support.size() == 3);
        for (int j = 1; j <= 6; ++j) {
            const bool on = std::find(t.support.begin(), t.support.end(), j) != t.support.end();
            CHECK(t.active(j) == on);
            for (int k = 2; k <= 9; ++k) {
                const double nb = t.block(j, k).norm();
                if (!on) {
                    CHECK(nb == 0.0);
                    continue;
                }
                const double c = 2.0 * std::exp2(2.0 * 2);  // amplitude 2^{(alpha+1/2) k_star}
                CHECK(nb == doctest::Approx(c * std::exp2(-2.0 * k)).epsilon(1e-12));
            }
        }
        // Partial sums of squared block norms settle at the stored depth.
        for (int j : t.support) {
            double s = 0.0, last = 0.0;
            for (int k = 2; k <= 9; ++k) {
                last = t.block(j, k).squaredNorm();
                s += last;
            }
            CHECK(last <= 1e-8 * s);
        }
    }

    TEST_CASE("fixed support and random scale options")
    {
        TruthOptions opt;
        opt.random_support = false;
        opt.random_scale = true;
        const auto t = make_truth(5, 2, 1.0, 1, 6, 3, opt);
        CHECK(t.support == std::vector<int>{1, 2});
        double lo = 1e9, hi = 0.0;
        for (int k = 1; k <= 6; ++k) {
            const double g = t.block(1, k).norm() / (t.scale[0] * std::exp2(-1.5 * k));
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
        CHECK(lo >= 0.5);
        CHECK(hi <= 1.5);
    }

    TEST_CASE("realized components add up to f_star")
    {
        const auto sc = make_scenario(base_config());
        const auto d = simulate(sc);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(d.X.rows());
        for (int j = 1; j <= sc.truth.p; ++j)
            for (int k = sc.truth.k_star; k <= sc.truth.depth; ++k) sum += d.component(j, k);
        CHECK((sum - d.f_star).norm() < 1e-10 * (1.0 + d.f_star.norm()));
        CHECK((evaluate_truth(sc.truth, d.X) - d.f_star).norm() < 1e-10 * (1.0 + d.f_star.norm()));
    }

    TEST_CASE("correlated design keeps uniform marginals and induces correlation")
    {
        auto c = base_config();
        c.n = 20000;
        c.depth = 4;
        c.design = DesignKind::CorrelatedUniform;
        c.correlation = 0.8;
        const auto d = simulate(make_scenario(c));
        for (int j = 0; j < c.p; ++j) {
            const auto col = d.X.col(j).array();
            CHECK(col.minCoeff() >= 0.0);
            CHECK(col.maxCoeff() <= 1.0);
            CHECK(std::abs(col.mean() - 0.5) < 0.01);
            CHECK(std::abs((col - col.mean()).square().mean() - 1.0 / 12.0) < 0.003);
        }
        const auto a = d.X.col(0).array() - 0.5, b = d.X.col(1).array() - 0.5;
        CHECK((a * b).mean() * 12.0 > 0.6);
    }

    TEST_CASE("population Sobolev norms")
    {
        const auto t = single_block_truth(2, 2, 6, 1, 3, 0.5);
        const auto s = population_sobolev(t, 1, 1.5);
        CHECK(s.norm_alpha == doctest::Approx(std::exp2(1.5 * 3) * 0.5).epsilon(1e-14));
        CHECK(s.norm_sobolev == doctest::Approx(s.norm_alpha).epsilon(1e-14));
        const auto z = population_sobolev(t, 2, 1.5);
        CHECK(z.norm_alpha == 0.0);
        CHECK(z.norm_sobolev == 0.0);

        // alpha = 1, ||beta_k|| = 2^{-1.5 k}: the sum of 2^{-k} for k > k_star.
        std::vector<std::vector<Eigen::VectorXd>> coeffs(1);
        double direct = 0.0;
        for (int k = 2; k <= 12; ++k) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(1 << std::max(k - 1, 2));
            b(1) = std::exp2(-1.5 * k);
            coeffs[0].push_back(b);
            if (k > 2) direct += std::exp2(-k);
        }
        const auto g = make_truth_from_blocks(1, 2, 12, coeffs);
        CHECK(population_sobolev(g, 1, 1.0).norm_alpha == doctest::Approx(std::sqrt(direct)).epsilon(1e-14));
        CHECK(population_sobolev(g, 1, 1.0).tail_bound == 0.0);
    }

    TEST_CASE("generated truth reports a geometric tail bound")
    {
        const auto t = make_truth(3, 3, 1.0, 1, 8, 5);
        for (int j : t.support) {
            const auto s = population_sobolev(t, j, 1.0);
            CHECK(s.tail_bound > 0.0);
            CHECK(s.tail_bound < 1e-2 * s.norm_alpha * s.norm_alpha);
        }
    }

    TEST_CASE("population complexity aggregates")
    {
        std::vector<std::vector<Eigen::VectorXd>> coeffs(3);
        const double alpha = 1.0;
        const double norms[2] = {3.0, 4.0};
        for (int j = 0; j < 2; ++j)
            for (int k = 1; k <= 4; ++k) {
                Eigen::VectorXd b = Eigen::VectorXd::Zero(1 << std::max(k - 1, 1));
                if (k == 2) b(0) = norms[j] / std::exp2(alpha * 2);
                coeffs[j].push_back(b);
            }
        const auto t = make_truth_from_blocks(3, 1, 4, coeffs);
        CHECK(population_complexity(t, alpha, 2.0).M_alpha_q == doctest::Approx(5.0).epsilon(1e-14));
        CHECK(population_complexity(t, alpha, 0.0).M_alpha_q == 2.0);
        CHECK(population_complexity(t, alpha, q_inf).M_alpha_q == doctest::Approx(4.0).epsilon(1e-14));
        const double sum = population_sobolev(t, 1, alpha).norm_alpha + population_sobolev(t, 2, alpha).norm_alpha;
        CHECK(population_complexity(t, alpha, 1.0).M_alpha_q == doctest::Approx(sum).epsilon(1e-14));
        CHECK(population_complexity(t, alpha, 0.0).M_q_BR == 0.0);  // baseline blocks are zero

        const auto r = make_truth(8, 3, 2.0, 2, 8, 9);
        CHECK(population_complexity(r, 2.0, 0.0).M_alpha_q == 3.0);
    }

    TEST_CASE("l_q aggregates")
    {
        CHECK(lq_aggregate({0.0, 2.0, 0.0, 5.0}, 0.0) == 2.0);
        CHECK(lq_aggregate({1.0, 2.0, 2.0}, 2.0) == doctest::Approx(3.0));
        CHECK(lq_aggregate({1.0, 7.0}, q_inf) == 7.0);
        CHECK(lq_power(3.0, 0.0) == 3.0);
        CHECK(lq_power(3.0, 2.0) == doctest::Approx(9.0));
    }

    TEST_CASE("out-of-sample error of the exact truth is zero")
    {
        const auto sc = make_scenario(base_config());
        const auto d = simulate(sc);
        FitResult f;
        f.scheme = sc.truth.scheme();
        for (int g = 0; g < f.scheme.num_groups(); ++g)
            f.beta.push_back(sc.truth.block(f.scheme.groups[g].j, f.scheme.groups[g].k));
        const auto design = assemble_design(d.X, BasisFamily::Fourier, f.scheme);
        const auto o = out_of_sample_error(f, design, sc, 500, 1);
        CHECK(o.error < 1e-20);
        CHECK_THROWS_AS(out_of_sample_error(f, design, sc, 1, 1), input_error);
    }

    TEST_CASE("zero fit recovers the squared L2 norm and Monte-Carlo scaling")
    {
        auto c = base_config();
        c.p = 1;
        c.s0 = 1;
        c.eps = std::exp(-1.0);
        const auto t = single_block_truth(1, 1, 5, 1, 3, 1.0);
        Scenario sc = make_scenario(c);
        sc.truth = t;
        FitResult f;
        f.scheme = make_scheme_levels({ComponentKind::nonparametric()}, 1, 2);
        for (int g = 0; g < f.scheme.num_groups(); ++g) f.beta.push_back(Eigen::VectorXd::Zero(f.scheme.dims[g]));
        const auto design = assemble_design(testing::grid_design(8, 1), BasisFamily::Fourier, f.scheme);
        const auto a = out_of_sample_error(f, design, sc, 4000, 2);
        CHECK(std::abs(a.error - 1.0) <= 3.0 * a.std_error);
        const auto b = out_of_sample_error(f, design, sc, 16000, 2);
        CHECK(b.std_error / a.std_error == doctest::Approx(0.5).epsilon(0.15));
    }

    TEST_CASE("Parseval on the uniform design")
    {
        auto c = base_config();
        c.sigma = 0.0;
        c.n = 5000;
        c.depth = 8;
        const auto sc = make_scenario(c);
        const auto d = simulate(sc);
        for (int j : sc.truth.support) {
            Eigen::VectorXd fj = Eigen::VectorXd::Zero(c.n);
            double coef = 0.0;
            for (int k = sc.truth.k_star; k <= sc.truth.depth; ++k) {
                fj += d.component(j, k);
                coef += sc.truth.block(j, k).squaredNorm();
            }
            const Eigen::ArrayXd sq = fj.array().square();
            const double m = sq.mean();
            const double se = std::sqrt((sq - m).square().sum() / (c.n - 1) / c.n);
            CHECK(std::abs(m - coef) <= 3.0 * se);
        }
    }

    TEST_CASE("truncation tail in L2 stays below the geometric bound")
    {
        auto c = base_config();
        c.sigma = 0.0;
        c.n = 5000;
        c.depth = 8;
        c.alpha = 1.0;
        const auto sc = make_scenario(c);
        const int k_max = sc.truth.k_star + 2;
        std::vector<std::vector<Eigen::VectorXd>> tail(sc.truth.p);
        for (int j : sc.truth.support)
            for (int k = sc.truth.k_star; k <= sc.truth.depth; ++k)
                tail[j - 1].push_back(k <= k_max ? Eigen::VectorXd::Zero(sc.truth.block(j, k).size()).eval()
                                                 : sc.truth.block(j, k));
        const auto t = make_truth_from_blocks(sc.truth.p, sc.truth.k_star, sc.truth.depth, tail);
        const auto d = simulate(sc);
        const Eigen::ArrayXd sq = evaluate_truth(t, d.X).array().square();
        const double m = sq.mean();
        const double se = std::sqrt((sq - m).square().sum() / (c.n - 1) / c.n);
        const double M1 = population_complexity(sc.truth, 1.0, 1.0).M_alpha_q;
        const double bound = C_alpha(1.0) * std::exp2(-1.0 * k_max) * M1;
        CHECK(m <= bound * bound + 3.0 * se);
    }

    TEST_CASE("random streams differ by purpose and replicate")
    {
        auto a = make_stream(1, 0, 1), b = make_stream(1, 0, 2), c = make_stream(1, 1, 1), a2 = make_stream(1, 0, 1);
        const auto va = a(), vb = b(), vc = c();
        CHECK(va != vb);
        CHECK(va != vc);
        CHECK(va == a2());
    }
}
