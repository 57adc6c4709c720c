#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mbl;

namespace {

/// Root of phi'(lambda) = p lambda^{p-1} x3 - q lambda^{-q-1} x4, found by minimizing |phi'|.
double lambda_oracle(double x3, double x4, double p) {
    const double q = p / (p - 1.0);
    auto dphi = [&](double l) { return std::abs(p * std::pow(l, p - 1) * x3 - q * std::pow(l, -q - 1) * x4); };
    return oracle::golden_section(dphi, 1e-3, 1e3);
}

}  // namespace

TEST(OptimalLambda, Examples) {
    EXPECT_DOUBLE_EQ(optimal_lambda(1.0, 1.0, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(optimal_lambda(1.0, 16.0, 2.0), 2.0);
    EXPECT_NEAR(optimal_lambda(1.0, 1.0, 1.5), std::pow(2.0, 2.0 / 9.0), 1e-15);
}

TEST(OptimalLambda, MatchesCriticalPointSearch) {
    Rng rng = make_rng(31);
    for (int i = 0; i < 200; ++i) {
        const double p = uniform(rng, 1.05, 2.0);
        const double x3 = std::exp(uniform(rng, -3.0, 3.0));
        const double x4 = std::exp(uniform(rng, -3.0, 3.0));
        const double l = optimal_lambda(x3, x4, p);
        EXPECT_NEAR(l, lambda_oracle(x3, x4, p), 1e-9 * l);
        for (double eps : {1e-3, -1e-3, 0.1, -0.1}) {
            EXPECT_GE(lambda_objective(l * (1 + eps), x3, x4, p), lambda_objective(l, x3, x4, p));
        }
    }
}

TEST(OptimalLambda, MinimumValueIsTheHoelderProduct) {
    Rng rng = make_rng(32);
    for (int i = 0; i < 200; ++i) {
        const double p = uniform(rng, 1.05, 2.0);
        const double q = p / (p - 1.0);
        const double x3 = std::exp(uniform(rng, -3.0, 3.0));
        const double x4 = std::exp(uniform(rng, -3.0, 3.0));
        const double l = lambda_oracle(x3, x4, p);
        const double expected = p * std::pow(q / p, 1.0 / q) * std::pow(x3, 1.0 / p) * std::pow(x4, 1.0 / q);
        EXPECT_NEAR(lambda_objective(optimal_lambda(x3, x4, p), x3, x4, p), expected, 1e-12 * expected);
        EXPECT_NEAR(lambda_objective(l, x3, x4, p), expected, 1e-9 * expected);
    }
}

TEST(OptimalLambda, RejectsDegenerateInput) {
    EXPECT_THROW(optimal_lambda(0.0, 1.0, 2.0), InvalidArgument);
    EXPECT_THROW(optimal_lambda(1.0, 1.0, 1.0), InvalidArgument);
}

TEST(Homogeneity, ObjectiveIsInvariant) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto filt = fixture::random_filtration(seed);
        Rng rng = make_rng(seed, 33);
        GundyOperator T = make_random_transform(filt, 2, rng);
        MartFunction f = random_function(filt, 2, rng);
        MartFunction g = random_function(filt, 1, rng);
        const double lambda = std::exp(uniform(rng, -2.0, 2.0));
        const double a = witness_objective(f, g, T);
        const double b = witness_objective(f * lambda, g * (1 / lambda), T);
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, l2_norm(f) * l2_norm(g)));
    }
}

TEST(LpScan, UnitNormAtTwo) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto filt = fixture::random_filtration(seed, 4);
        const ScanReport r = lp_constant_scan(filt, {.p = 2.0, .trials = 300, .seed = seed, .dim = 2});
        EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
        EXPECT_GT(r.max_ratio, 0.0);
        EXPECT_EQ(r.ratios.size(), 300u);
        std::size_t total = 0;
        for (auto h : r.histogram) total += h;
        EXPECT_EQ(total, 300u);
        ASSERT_TRUE(r.argmax_witness.has_value());
        EXPECT_DOUBLE_EQ(r.ratios[r.argmax_trial], r.max_ratio);
    }
}

TEST(LpScan, ConstantFunctionsAreAnnihilated) {
    auto filt = fixture::random_filtration(4);
    Rng rng = make_rng(34);
    GundyOperator T = make_random_transform(filt, 2, rng);
    const MartFunction c = MartFunction::constant(filt, random_hvec(rng, 2));
    EXPECT_LE(lp_norm(apply(T, c), 1.5), 1e-14);
}

TEST(LpScan, FiniteBelowTwo) {
    auto filt = fixture::random_filtration(5, 4);
    const ScanReport r = lp_constant_scan(filt, {.p = 1.5, .trials = 300, .seed = 5, .dim = 2});
    EXPECT_TRUE(std::isfinite(r.max_ratio));
    EXPECT_GT(r.max_ratio, 0.0);
}

TEST(LpScan, DeterministicPerSeed) {
    auto filt = fixture::random_filtration(6);
    const ScanReport a = lp_constant_scan(filt, {.p = 1.7, .trials = 50, .seed = 9});
    const ScanReport b = lp_constant_scan(filt, {.p = 1.7, .trials = 50, .seed = 9});
    EXPECT_EQ(a.ratios, b.ratios);
    EXPECT_THROW(lp_constant_scan(filt, {.p = 2.5}), InvalidArgument);
}

TEST(Search, ZeroGGivesZero) {
    auto filt = build_dyadic(3);
    const SearchResult r = lower_bound_search(filt, {.trials = 10, .seed = 1, .force_zero_g = true});
    ASSERT_TRUE(r.feasible());
    EXPECT_EQ(r.best_objective, 0.0);
}

TEST(Search, HaarReachesOneAtTheUnitPoint) {
    auto filt = build_dyadic(1);
    BellmanPoint t = make_point(HVec::Zero(1), 0.0, 1.0, 1.0, 2.0);
    const SearchResult r = lower_bound_search(filt, {.trials = 1, .seed = 1, .refine_sweeps = 0, .target = t});
    ASSERT_TRUE(r.feasible());
    EXPECT_NEAR(r.best_objective, 1.0, 1e-12);
    EXPECT_NEAR(r.achieved_point->x3, 1.0, 1e-12);
    EXPECT_NEAR(r.achieved_point->x4, 1.0, 1e-12);
    EXPECT_NEAR(r.achieved_point->x2, 0.0, 1e-12);
}

TEST(Search, NeverExceedsTheCandidateAtTheAchievedPoint) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto filt = build_dyadic(3);
        const SearchResult r = lower_bound_search(filt, {.trials = 20, .seed = seed, .dim = 2});
        ASSERT_TRUE(r.feasible());
        EXPECT_GE(r.best_objective, 1.0 - 1e-12);
        const BellmanPoint x = bellman_point(r.witness->f, r.witness->g, r.witness->T, filt->root_id(), 2.0);
        EXPECT_NEAR(x.x3, 1.0, 1e-9);
        EXPECT_NEAR(x.x4, 1.0, 1e-9);
        EXPECT_GE(quadratic_candidate()(*r.achieved_point), r.best_objective - 1e-6);
    }
}

TEST(Search, MonotoneInTrials) {
    auto filt = fixture::random_filtration(7);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t n : {1u, 5u, 15u}) {
        const SearchResult r = lower_bound_search(filt, {.p = 1.5, .trials = n, .seed = 7});
        EXPECT_GE(r.best_objective, prev);
        prev = r.best_objective;
    }
}

TEST(Duality, ZeroFunction) {
    auto filt = build_dyadic(2);
    Rng rng = make_rng(35);
    GundyOperator T = make_random_transform(filt, 1, rng);
    const DualityReport r = duality_bound(T, MartFunction::zero(filt, 1), quadratic_candidate());
    EXPECT_EQ(r.empirical, 0.0);
    EXPECT_DOUBLE_EQ(r.analytic, analytic_lp_constant(1.0, 1.0, 2.0));
}

TEST(Duality, ConsistentAtTwo) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto filt = fixture::random_filtration(seed);
        Rng rng = make_rng(seed, 36);
        GundyOperator T = make_random_transform(filt, 2, rng);
        const MartFunction f = random_function(filt, 2, rng);
        const DualityReport r =
            duality_bound(T, f, quadratic_candidate(std::min(0.5, regularity_delta(*filt))), {.samples = 20, .seed = seed});
        EXPECT_TRUE(r.certified);
        EXPECT_TRUE(r.consistent());
        EXPECT_GE(r.worst_margin, -1e-6);
        EXPECT_GE(r.worst_hoelder_margin, -1e-12);
        EXPECT_LE(r.empirical, 1.0 + 1e-9);
    }
}

TEST(Duality, WithheldWithoutAValidCandidate) {
    auto filt = build_dyadic(3);
    Rng rng = make_rng(37);
    GundyOperator T = make_random_transform(filt, 1, rng);
    const MartFunction f = random_function(filt, 1, rng);
    const DualityReport r = duality_bound(T, f, linear_candidate(1.0, 1.5), {.samples = 4});
    EXPECT_FALSE(r.certified);
    EXPECT_TRUE(std::isnan(r.analytic));
    EXPECT_FALSE(r.consistent());
    EXPECT_TRUE(r.failing_sample.has_value());
}
