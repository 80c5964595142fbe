#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oos/normal_theory.hpp"

#include "oracles.hpp"

using Catch::Approx;
using namespace oos;

namespace {

// k = 3 sources with shares (0.2, 0.3, 0.5), means (0, 2, 5), variances (9, 1, 5)
NormalSourceParams benchmark_params(std::size_t n) {
    return NormalSourceParams({0.0, 2.0, 5.0}, {9.0, 1.0, 5.0},
                              Proportions::from_probabilities({0.2, 0.3, 0.5}), n);
}

// balanced thirds, means (-mu, 0, mu), unit variances, n = 30
NormalSourceParams spread_params(double mu) {
    const std::vector<std::size_t> counts{10, 10, 10};
    return NormalSourceParams({-mu, 0.0, mu}, {1.0, 1.0, 1.0}, Proportions::from_counts(counts),
                              30);
}

NormalSourceParams random_params(std::mt19937_64& engine, std::size_t k_min = 2,
                                 std::size_t k_max = 4) {
    std::uniform_int_distribution<std::size_t> k_dist(k_min, k_max);
    std::uniform_int_distribution<std::size_t> count_dist(5, 60);
    std::uniform_real_distribution<double> mean_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> var_dist(0.5, 6.0);
    const std::size_t k = k_dist(engine);
    std::vector<std::size_t> counts(k);
    std::vector<double> means(k), vars(k);
    std::size_t n = 0;
    for (std::size_t j = 0; j < k; ++j) {
        counts[j] = count_dist(engine);
        n += counts[j];
        means[j] = mean_dist(engine);
        vars[j] = var_dist(engine);
    }
    return NormalSourceParams(means, vars, Proportions::from_counts(counts), n);
}

}  // namespace

TEST_CASE("standard normal cdf against reference values") {
    // reference values computed with scipy.stats.norm.cdf
    const std::pair<double, double> refs[] = {
        {0.0, 0.5},
        {-1.0, 0.15865525393145707},
        {1.0, 0.8413447460685429},
        {1.96, 0.9750021048517795},
        {-1.96, 0.024997895148220435},
        {-5.0, 2.866515718791933e-07},
        {2.5, 0.9937903346742238},
        {-0.5, 0.3085375387259869},
        {3.0, 0.9986501019683699},
    };
    for (const auto& [x, phi] : refs) CHECK(std_normal_cdf(x) == Approx(phi).margin(1e-12));
}

TEST_CASE("folded normal mean") {
    CHECK(folded_normal_mean(0.0, 1.0) == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
    // quadrature oracle gives 1.1666309411753726 at (1, 1)
    CHECK(folded_normal_mean(1.0, 1.0) == Approx(1.1666309411753726).margin(1e-12));
    CHECK(folded_normal_mean(1.0, 1.0) ==
          Approx(oracles::folded_mean_quadrature(1.0, 1.0)).margin(1e-9));

    SECTION("matches quadrature on a grid") {
        for (double mu : {-2.5, -0.7, 0.0, 0.3, 1.8, 4.0})
            for (double sigma : {0.2, 1.0, 3.5})
                CHECK(folded_normal_mean(mu, sigma) ==
                      Approx(oracles::folded_mean_quadrature(mu, sigma)).margin(1e-9));
    }
    SECTION("even in mu, approaches |mu| for large mu/sigma, dominates |mu|") {
        for (double mu : {0.1, 1.0, 2.7}) {
            CHECK(folded_normal_mean(-mu, 2.0) == folded_normal_mean(mu, 2.0));
            CHECK(folded_normal_mean(mu, 2.0) >= mu);
        }
        CHECK(folded_normal_mean(50.0, 1.0) == Approx(50.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(folded_normal_mean(1.0, 0.0), InvalidParamsError);
    CHECK_THROWS_AS(folded_normal_mean(1.0, -2.0), InvalidParamsError);
}

TEST_CASE("normal_oos_squared") {
    SECTION("balanced three-source closed form 1.1 + 2 mu^2") {
        for (double mu : {0.0, 1.0, 2.5})
            CHECK(normal_oos_squared(spread_params(mu)) ==
                  Approx(1.1 + 2.0 * mu * mu).epsilon(1e-10));
    }
    SECTION("benchmark reference column") {
        const std::pair<std::size_t, double> refs[] = {
            {100, 18.171}, {200, 18.084},  {300, 18.055},  {500, 18.031},
            {700, 18.021}, {1000, 18.014}, {10000, 17.998},
        };
        for (const auto& [n, value] : refs)
            CHECK(normal_oos_squared(benchmark_params(n)) == Approx(value).margin(1e-3));
    }
    SECTION("identical balanced sources reduce to sigma^2 (1 + k/n)") {
        for (std::size_t k : {2ul, 3ul, 5ul}) {
            const std::size_t per = 12, n = k * per;
            const NormalSourceParams params(
                std::vector<double>(k, 1.5), std::vector<double>(k, 2.0),
                Proportions::from_counts(std::vector<std::size_t>(k, per)), n);
            CHECK(normal_oos_squared(params) ==
                  Approx(2.0 * (1.0 + static_cast<double>(k) / static_cast<double>(n)))
                      .epsilon(1e-12));
        }
    }
    SECTION("the small-sample term must carry the training-source variance") {
        // The same combination with the test-source variance in the 1/n term
        // lands at 18.150 instead of the reference 18.171 at n = 100.
        const auto params = benchmark_params(100);
        const auto& p = params.shares.p;
        const auto& od = params.shares.od;
        double wrong = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            wrong += p[j] * params.variances[j];
            for (std::size_t l = 0; l < 3; ++l) {
                if (l == j) continue;
                const double d = params.means[j] - params.means[l];
                wrong += od[j] * p[l] * d * d;
                wrong += od[j] * params.variances[j] / 100.0;  // j instead of l
            }
        }
        CHECK(wrong == Approx(18.150).margin(1e-3));
        CHECK(std::abs(wrong - normal_oos_squared(params)) > 0.01);
    }
}

TEST_CASE("normal_oos_absolute") {
    SECTION("benchmark reference column") {
        CHECK(normal_oos_absolute(benchmark_params(100)) == Approx(3.639).margin(1e-3));
        CHECK(normal_oos_absolute(benchmark_params(10000)) == Approx(3.633).margin(1e-3));
    }
    SECTION("equal means collapse to the zero-mean folded value") {
        // all folded terms are sqrt(1.1) * sqrt(2/pi) and the weights sum to 1
        const NormalSourceParams params({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0},
                                        Proportions::from_counts(std::vector<std::size_t>{10, 10, 10}),
                                        30);
        CHECK(normal_oos_absolute(params) ==
              Approx(std::sqrt(1.1) * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    }
    SECTION("matches a quadrature-based direct sum on random parameters") {
        std::mt19937_64 engine(59);
        for (int trial = 0; trial < 10; ++trial) {
            const auto params = random_params(engine);
            const std::size_t k = params.source_count();
            const double n = static_cast<double>(params.n);
            double direct = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t l = 0; l < k; ++l) {
                    if (l == j) continue;
                    const double sd = std::sqrt(params.variances[j] +
                                                params.variances[l] / (n * params.shares.p[l]));
                    direct += params.shares.od[j] * params.shares.p[l] *
                              oracles::folded_mean_quadrature(params.means[j] - params.means[l], sd);
                }
            CHECK(normal_oos_absolute(params) == Approx(direct).epsilon(1e-8));
        }
    }
    SECTION("never exceeds the square root of the squared-loss value") {
        std::mt19937_64 engine(61);
        for (int trial = 0; trial < 50; ++trial) {
            const auto params = random_params(engine);
            CHECK(normal_oos_absolute(params) <=
                  std::sqrt(normal_oos_squared(params)) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("normal_pooled_cv_squared") {
    SECTION("balanced three-source closed form 1.05 + 1.5 mu^2") {
        for (double mu : {0.0, 1.0, 2.5})
            CHECK(normal_pooled_cv_squared(spread_params(mu)) ==
                  Approx(1.05 + 1.5 * mu * mu).epsilon(1e-10));
    }
    SECTION("identical balanced sources reduce to sigma^2 (1 + k/((k-1) n))") {
        for (std::size_t k : {2ul, 3ul, 4ul}) {
            const std::size_t per = 15, n = k * per;
            const NormalSourceParams params(
                std::vector<double>(k, -0.5), std::vector<double>(k, 3.0),
                Proportions::from_counts(std::vector<std::size_t>(k, per)), n);
            const double kd = static_cast<double>(k), nd = static_cast<double>(n);
            CHECK(normal_pooled_cv_squared(params) ==
                  Approx(3.0 * (1.0 + kd / ((kd - 1.0) * nd))).epsilon(1e-12));
        }
    }
    SECTION("equals the out-of-source value when k = 2") {
        std::mt19937_64 engine(67);
        for (int trial = 0; trial < 20; ++trial) {
            const auto params = random_params(engine, 2, 2);
            CHECK(normal_pooled_cv_squared(params) ==
                  Approx(normal_oos_squared(params)).epsilon(1e-12));
        }
    }
}

TEST_CASE("bivariate_square_cov") {
    CHECK(bivariate_square_cov(1.3, -0.2, 2.0, 3.0, 0.0) == 0.0);
    CHECK(bivariate_square_cov(0.0, 0.0, 2.0, 3.0, 1.5) == Approx(2.0 * 1.5 * 1.5));
    CHECK(bivariate_square_cov(1.0, 2.0, 1.0, 1.0, 0.5) == Approx(4.5));
    CHECK_THROWS_AS(bivariate_square_cov(0.0, 0.0, 1.0, 1.0, 1.5), InvalidCovarianceError);

    SECTION("matches a Monte Carlo oracle") {
        std::mt19937_64 engine(71);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double mu1 = 1.0, mu2 = 2.0, v1 = 1.0, v2 = 1.0, c12 = 0.5;
        // draw (X1, X2) via X2 = mu2 + (c12/v1)(X1 - mu1) + residual
        const double resid_sd = std::sqrt(v2 - c12 * c12 / v1);
        const auto est = oracles::mc_covariance(400000, 25, [&] {
            const double x1 = mu1 + std::sqrt(v1) * normal(engine);
            const double x2 = mu2 + (c12 / v1) * (x1 - mu1) + resid_sd * normal(engine);
            return std::pair{x1 * x1, x2 * x2};
        });
        CHECK(std::abs(est.value - bivariate_square_cov(mu1, mu2, v1, v2, c12)) < 3.0 * est.se);
    }
}

TEST_CASE("normal components: closed forms and reductions") {
    SECTION("equal means, unit variances, balanced: known constants") {
        const NormalSourceParams params({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0},
                                        Proportions::from_counts(std::vector<std::size_t>{10, 10, 10}),
                                        30);
        const auto c = normal_components_squared(params);
        // s^2 = 1 + 1/10 per pair; fitted-mean variance 1/10
        CHECK(c.v(0, 1) == Approx(2.0 * 1.1 * 1.1));
        CHECK(c.c_same(0, 1) == Approx(2.0 * 0.01));
        CHECK(c.c_rule(0, 1, 2) == Approx(2.0));
        CHECK(c.c_cross(0, 1, 2) == Approx(2.0 * 0.01));
        CHECK(c.c_entangled(0, 1, 2) == Approx(2.0 * 0.01));
        CHECK(c.c_mutual(0, 1) == Approx(2.0 * 0.2 * 0.2));
    }
    SECTION("covariances obey the correlation bound against the term variance") {
        std::mt19937_64 engine(73);
        for (int trial = 0; trial < 30; ++trial) {
            const auto params = random_params(engine);
            const auto c = normal_components_squared(params);
            const std::size_t k = params.source_count();
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t l = 0; l < k; ++l)
                    if (l != j) CHECK(std::abs(c.c_same(j, l)) <= c.v(j, l) * (1.0 + 1e-12));
        }
    }
    SECTION("every family matches its Monte Carlo oracle on the benchmark") {
        const auto params = benchmark_params(100);
        const auto c = normal_components_squared(params);
        oracles::NormalComponentOracle oracle(params, 20240601);
        const std::size_t draws = 200000;
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t l = 0; l < 3; ++l) {
                if (l == j) continue;
                const auto v = oracle.v(j, l, draws);
                CHECK(std::abs(v.value - c.v(j, l)) < 3.5 * v.se);
                const auto same = oracle.c_same(j, l, draws);
                CHECK(std::abs(same.value - c.c_same(j, l)) < 3.5 * same.se);
                const auto mutual = oracle.c_mutual(j, l, draws);
                CHECK(std::abs(mutual.value - c.c_mutual(j, l)) < 3.5 * mutual.se);
                for (std::size_t lp = 0; lp < 3; ++lp) {
                    if (lp == j || lp == l) continue;
                    const auto rule = oracle.c_rule(j, l, lp, draws);
                    CHECK(std::abs(rule.value - c.c_rule(j, l, lp)) < 3.5 * rule.se);
                    const auto cross = oracle.c_cross(j, l, lp, draws);
                    CHECK(std::abs(cross.value - c.c_cross(j, l, lp)) < 3.5 * cross.se);
                    const auto ent = oracle.c_entangled(j, l, lp, draws);
                    CHECK(std::abs(ent.value - c.c_entangled(j, l, lp)) < 3.5 * ent.se);
                }
            }
        }
    }
}

TEST_CASE("theoretical_variance") {
    SECTION("zero components give zero variance") {
        MomentComponents zero(3);
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t l = 0; l < 3; ++l) {
                if (l == j) continue;
                zero.set_v(j, l, 0.0);
                zero.set_c_same(j, l, 0.0);
                zero.set_c_mutual(j, l, 0.0);
                for (std::size_t lp = 0; lp < 3; ++lp) {
                    if (lp == j || lp == l) continue;
                    zero.set_c_rule(j, l, lp, 0.0);
                    zero.set_c_cross(j, l, lp, 0.0);
                    zero.set_c_entangled(j, l, lp, 0.0);
                }
            }
        CHECK(theoretical_variance(zero, Proportions::from_probabilities({0.2, 0.3, 0.5}), 100) ==
              0.0);
    }
    SECTION("unset components are rejected") {
        MomentComponents incomplete(3);
        CHECK_THROWS_AS(
            theoretical_variance(incomplete, Proportions::from_probabilities({0.2, 0.3, 0.5}), 100),
            IncompleteComponentsError);
        CHECK_THROWS_AS(
            theoretical_variance(MomentComponents(2),
                                 Proportions::from_probabilities({0.2, 0.3, 0.5}), 100),
            IncompleteComponentsError);
    }
    SECTION("agrees with the raw block-sum route on random parameters") {
        std::mt19937_64 engine(79);
        for (int trial = 0; trial < 100; ++trial) {
            const auto params = random_params(engine);
            const auto c = normal_components_squared(params);
            const double simplified = theoretical_variance(c, params.shares, params.n);
            const double blocks = oracles::block_variance(c, params.shares, params.n);
            CHECK(simplified == Approx(blocks).epsilon(1e-10));
            CHECK(simplified >= 0.0);
        }
    }
    SECTION("benchmark plug-in value, and why the mutual term matters") {
        const auto params = benchmark_params(100);
        const auto c = normal_components_squared(params);
        const double full = theoretical_variance(c, params.shares, 100);
        CHECK(full == Approx(11.725834).margin(1e-5));

        double mutual_part = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t jp = 0; jp < 3; ++jp)
                if (jp != j)
                    mutual_part += params.shares.od[j] * params.shares.od[jp] *
                                   params.shares.p[j] * params.shares.p[jp] * c.c_mutual(j, jp);
        const double without_mutual = full - mutual_part;
        CHECK(without_mutual == Approx(8.218434).margin(1e-5));
        // the reference empirical variance for this setup is 11.524: the full
        // combiner lands within 15%, the truncated one does not
        CHECK(std::abs(full - 11.524) / 11.524 < 0.15);
        CHECK(std::abs(without_mutual - 11.524) / 11.524 > 0.15);
    }
    SECTION("O(1/n) decay: halving ratio stays near 1/2") {
        for (std::size_t n : {500ul, 1000ul, 2000ul}) {
            const double at_n = theoretical_variance(normal_components_squared(benchmark_params(n)),
                                                     benchmark_params(n).shares, n);
            const double at_2n =
                theoretical_variance(normal_components_squared(benchmark_params(2 * n)),
                                     benchmark_params(2 * n).shares, 2 * n);
            const double ratio = at_2n / at_n;
            CHECK(ratio > 0.45);
            CHECK(ratio < 0.55);
        }
    }
}

TEST_CASE("squared-loss closed form decreases in n towards its limit") {
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t n : {100ul, 200ul, 300ul, 500ul, 700ul, 1000ul, 10000ul}) {
        const double value = normal_oos_squared(benchmark_params(n));
        CHECK(value < previous);
        previous = value;
    }
    // limit value: drop the 1/n term
    const auto params = benchmark_params(100);
    double limit = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        limit += params.shares.p[j] * params.variances[j];
        for (std::size_t l = 0; l < 3; ++l)
            if (l != j) {
                const double d = params.means[j] - params.means[l];
                limit += params.shares.od[j] * params.shares.p[l] * d * d;
            }
    }
    CHECK(previous > limit);
    CHECK(previous == Approx(limit).margin(2e-3));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(NormalSourceParams({0.0, 1.0}, {1.0},
                                       Proportions::from_probabilities({0.5, 0.5}), 10),
                    InvalidParamsError);
    CHECK_THROWS_AS(NormalSourceParams({0.0, 1.0}, {1.0, -1.0},
                                       Proportions::from_probabilities({0.5, 0.5}), 10),
                    InvalidParamsError);
    CHECK_THROWS_AS(NormalSourceParams({0.0, 1.0}, {1.0, 1.0},
                                       Proportions::from_probabilities({0.01, 0.99}), 10),
                    InvalidParamsError);
}
