#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mixpersist/path_sampler.hpp"
#include "mixpersist/persistence.hpp"

using namespace mixpersist;

namespace {

PersistenceEstimate model_point(double T, double p, std::size_t n) {
    PersistenceEstimate e;
    e.T = T;
    e.p_hat = p;
    e.n_paths = n;
    e.se = std::sqrt(p * (1 - p) / n);
    return e;
}

}  // namespace

TEST_SUITE("persistence") {

TEST_CASE("Wilson interval") {
    // Frozen from the textbook formula in double precision.
    auto [lo, hi] = wilson_interval(50, 100);
    CHECK(lo == doctest::Approx(0.4038315303659956).epsilon(1e-13));
    CHECK(hi == doctest::Approx(0.5961684696340044).epsilon(1e-13));
    std::tie(lo, hi) = wilson_interval(0, 100);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(0.03699349820698568).epsilon(1e-13));
    std::tie(lo, hi) = wilson_interval(7, 40);
    CHECK(lo == doctest::Approx(0.0874541374603592).epsilon(1e-13));
    CHECK(hi == doctest::Approx(0.31949990331787714).epsilon(1e-13));
    std::tie(lo, hi) = wilson_interval(100, 100);
    CHECK(hi == 1.0);

    const auto e = proportion_estimate(8.0, 0, 1000, 12);
    CHECK(e.zero_count);
    CHECK(e.p_hat == 0.0);
    CHECK(e.grid_points_used == 12);
}

TEST_CASE("closed-form BM persistence") {
    CHECK(closed_form_bm_persistence(1.0, 1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-13));
    CHECK(closed_form_bm_persistence(4.0, 0.0) == 0.0);
    CHECK_THROWS_AS((void)closed_form_bm_persistence(0.0, 1.0), std::domain_error);
}

TEST_CASE("exact power law is recovered") {
    std::vector<PersistenceEstimate> es;
    for (const double T : {2.0, 4.0, 16.0, 64.0, 256.0, 1024.0}) es.push_back(model_point(T, 0.9 * std::pow(T, -0.3), 100000));
    const auto fit = fit_exponent(es, 1);
    CHECK(fit.theta_hat == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(0.9)).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(fit.points_used == 5);
    CHECK(fit.T_min == doctest::Approx(4.0));
    CHECK(fit.T_max == doctest::Approx(1024.0));
    CHECK(fit.std_error > 0.0);
}

TEST_CASE("zero counts are excluded and short ladders rejected") {
    std::vector<PersistenceEstimate> es;
    for (const double T : {1.0, 2.0, 4.0, 8.0}) es.push_back(model_point(T, std::pow(T, -0.5), 1000));
    auto zero = proportion_estimate(16.0, 0, 1000, 1);
    es.push_back(zero);
    CHECK(fit_exponent(es, 0).points_used == 4);
    CHECK(fit_exponent(es, 0).theta_hat == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)fit_exponent(es, 1), std::invalid_argument);
}

TEST_CASE("extrapolated fit on model data") {
    // Fine and coarse curves with the same exponent and different constant factors.
    const double beta = 0.5;
    std::vector<PersistenceEstimate> fine, coarse;
    for (const double T : {16.0, 64.0, 256.0, 1024.0, 4096.0}) {
        fine.push_back(model_point(T, 0.5 * std::pow(T, -0.25), 100000));
        coarse.push_back(model_point(T, 0.6 * std::pow(T, -0.25), 100000));
    }
    const auto fit = fit_exponent_extrapolated(fine, coarse, beta, 0);
    CHECK(fit.theta_hat == doctest::Approx(0.25).epsilon(1e-12));
    // w = 1/(4^beta - 1) = 1 at beta = 1/2: intercept 2 log 0.5 - log 0.6.
    CHECK(fit.intercept == doctest::Approx(2 * std::log(0.5) - std::log(0.6)).epsilon(1e-12));
    SurvivalCurves curves{fine, coarse, beta};
    CHECK(fit_curves(curves, 0).theta_hat == doctest::Approx(0.25).epsilon(1e-12));
    coarse.pop_back();
    CHECK_THROWS_AS((void)fit_exponent_extrapolated(fine, coarse, beta, 0), std::invalid_argument);
}

TEST_CASE("limits and coarsening") {
    const auto grid = TimeGrid::uniform(1.0, 9);
    const auto lim = barrier_limits(grid, 1.5, std::nullopt, 1);
    CHECK(lim.size() == 10);
    CHECK(lim[4] == 1.5);
    const auto c = coarsen_limits(lim, 4);
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> want{1.5, 1.5, inf, inf, inf, 1.5, inf, inf, inf, 1.5};
    CHECK(c == want);
    CHECK(coarsen_limits(lim, 4, false)[0] == inf);
}

TEST_CASE("extrapolated estimates from first-exceedance indices") {
    const auto grid = TimeGrid::uniform(4.0, 4);
    // Five paths: sentinel 5 means no exceedance.
    const std::vector<std::uint32_t> fine{5, 2, 4, 1, 5};
    const std::vector<std::uint32_t> coarse{5, 5, 4, 5, 5};
    const auto e = extrapolated_estimates(grid, fine, coarse, {1.0, 4.0}, 0.5);
    REQUIRE(e.size() == 2);
    // T=1: index 1 is reached by path 3 only, coarse never fails; fine 4 survivors, coarse-only 1.
    CHECK(e[0].p_hat == doctest::Approx((4.0 - 1.0) / 5.0));
    // T=4: fine survivors {0,4}; coarse-only {1,3}.
    CHECK(e[1].p_hat == doctest::Approx((2.0 - 2.0) / 5.0));
    CHECK(e[1].extrapolated);
    const auto plain = survival_estimates(grid, fine, {1.0, 4.0});
    CHECK(plain[0].p_hat == doctest::Approx(0.8));
    CHECK(plain[1].p_hat == doctest::Approx(0.4));
}

TEST_CASE("engine matches a direct scan of sampled paths") {
    const auto grid = TimeGrid::lamperti_log(0.01, 50, 60);
    const auto spec = ProcessSpec::mixed_independent(1, 0.75, 0.5, 0.3);
    const auto seed = SeedPolicy::named(3, "engine-scan");
    const std::size_t n = 500;
    const auto comps = spec_components(spec, grid);
    REQUIRE(comps.size() == 2);
    Observable o{"x", {{0, 1.0}, {1, 0.5}}, barrier_limits(grid, 1.0, std::nullopt, 1), false};
    Observable t{"abs", {{0, 1.0}}, barrier_limits(grid, 2.0, std::nullopt, 1), true};
    const auto first = run_engine(grid, comps, {o, t}, n, seed, 1);
    const auto again = run_engine(grid, comps, {o, t}, n, seed, 3);
    CHECK(first == again);

    const auto paths = sample_process(spec, grid, n, seed);
    const auto pure = sample_process(ProcessSpec::fbm(0.75), grid, n, seed);
    std::size_t mismatches = 0;
    for (std::size_t r = 0; r < n; ++r) {
        std::uint32_t f0 = static_cast<std::uint32_t>(grid.size()), f1 = f0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (f0 == grid.size() && paths.row(r)[i] > 1.0) f0 = static_cast<std::uint32_t>(i);
            if (f1 == grid.size() && std::abs(pure.row(r)[i]) > 2.0) f1 = static_cast<std::uint32_t>(i);
        }
        // The mixture is summed in a different order; allow a tie-breaking ulp at the barrier.
        mismatches += f0 != first[0][r];
        CHECK(f1 == first[1][r]);
    }
    CHECK(mismatches <= 1);
}

TEST_CASE("estimates are nested and deterministic") {
    PersistenceQuery q;
    q.spec = ProcessSpec::fbm(0.3);
    q.T_ladder = {1, 4, 16, 64};
    q.grid_policy = LampertiLogPolicy{1e-3, 64, 256};
    q.n_paths = 2000;
    q.seed = SeedPolicy::named(9, "nested");
    q.extrapolation_beta = 0.3;
    const auto a = estimate_curves(q, 1);
    const auto b = estimate_curves(q, 2);
    REQUIRE(a.fine.size() == 4);
    REQUIRE(a.extrapolating());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.fine[i].p_hat == b.fine[i].p_hat);
        CHECK(a.coarse[i].p_hat >= a.fine[i].p_hat);
        if (i > 0) CHECK(a.fine[i].p_hat <= a.fine[i - 1].p_hat);
    }
    q.n_paths = 10;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("shared scans agree with single queries") {
    PersistenceQuery q;
    q.spec = ProcessSpec::brownian();
    q.T_ladder = {1, 10, 100};
    q.grid_policy = LampertiLogPolicy{1e-3, 100, 200};
    q.n_paths = 1000;
    q.seed = SeedPolicy::named(2, "shared");
    auto q2 = q;
    q2.level = 2.0;
    const auto both = estimate_curves_shared({q, q2});
    REQUIRE(both.size() == 2);
    CHECK(both[0].fine[2].p_hat == estimate_curves(q).fine[2].p_hat);
    CHECK(both[1].fine[2].p_hat == estimate_curves(q2).fine[2].p_hat);
    CHECK(both[1].fine[2].p_hat >= both[0].fine[2].p_hat);
    auto q3 = q;
    q3.n_paths = 2000;
    CHECK_THROWS_AS((void)estimate_curves_shared({q, q3}), std::invalid_argument);
}

TEST_CASE("bias exponents") {
    CHECK(default_bias_exponent(ProcessSpec::brownian()) == 0.5);
    CHECK(default_bias_exponent(ProcessSpec::fbm(0.75)) == 0.75);
    CHECK(default_bias_exponent(ProcessSpec::integrated_fbm(0.25)) == 1.25);
    CHECK(default_bias_exponent(ProcessSpec::mixed_independent(1, 0.75, 1, 0.5)) == 0.5);
}

TEST_CASE("paired gap uses common random numbers for independent mixtures") {
    PersistenceQuery q;
    q.T_ladder = {2, 4, 8, 16, 32, 64};
    q.grid_policy = LampertiLogPolicy{1e-3, 64, 256};
    q.n_paths = 2000;
    q.seed = SeedPolicy::named(6, "gap");
    const auto g = paired_exponent_gap(ProcessSpec::mixed_independent(1, 0.75, 1, 0.5), ProcessSpec::fbm(0.75), q, 1);
    CHECK(g.common_random_numbers);
    CHECK(g.gap == doctest::Approx(g.mixed.theta_hat - g.dominant.theta_hat));
    const auto h = paired_exponent_gap(ProcessSpec::mixed_correlated(1, 0.75, 1, 0.5), ProcessSpec::fbm(0.75), q, 1);
    CHECK_FALSE(h.common_random_numbers);
}

TEST_CASE("exceedance probability and union bound") {
    const auto policy = LampertiLogPolicy{1e-3, 100, 128};
    CHECK_THROWS_AS((void)exceedance_probability(ProcessSpec::fbm(0.5), 0.4, 1, 100, policy, 200, {}),
                    std::domain_error);
    CHECK_THROWS_AS((void)exceedance_probability(ProcessSpec::fbm(0.5), 0.7, 0, 100, policy, 200, {}),
                    std::domain_error);
    const auto grid = TimeGrid::from_policy(policy);
    const double bound = exceedance_union_bound(ProcessSpec::brownian(), 0.7, 10, 100, grid);
    double want = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        if (t < 10 || t > 100) continue;
        want += std::erfc(std::pow(t, 0.7) / std::sqrt(2 * t));
    }
    CHECK(bound == doctest::Approx(want).epsilon(1e-12));
    const auto e = exceedance_probability(ProcessSpec::brownian(), 0.7, 10, 100, policy, 4000,
                                          SeedPolicy::named(1, "exceed"));
    CHECK(e.p_hat <= bound + 3 * e.se);
    CHECK(e.p_hat > 0.0);
}

}
