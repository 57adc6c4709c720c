#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace mbl;

namespace {

BellmanPoint pt(std::initializer_list<double> x1, double x2, double x3, double x4, double p = 2.0) {
    HVec v(static_cast<Eigen::Index>(x1.size()));
    Eigen::Index k = 0;
    for (double c : x1) v[k++] = c;
    return make_point(v, x2, x3, x4, p);
}

/// Smallest Var_lambda / diam^2 over 1-D configurations with weights >= delta, by grid
/// search over weights and interior positions (extreme points pinned at 0 and 1).
double brute_min_normalized_variance(double delta, int grid) {
    double best = std::numeric_limits<double>::infinity();
    const int nmax = std::min(3, static_cast<int>(std::floor(1.0 / delta + 1e-12)));
    for (int i = 0; i <= grid; ++i) {
        const double w0 = delta + (1.0 - 2 * delta) * i / grid;
        const double w1 = 1.0 - w0;
        if (w1 < delta - 1e-15) continue;
        best = std::min(best, w0 * w1);
    }
    if (nmax >= 3) {
        for (int i = 0; i <= grid; ++i) {
            for (int j = 0; j <= grid; ++j) {
                const double w0 = delta + (1.0 - 3 * delta) * i / grid;
                const double w1 = delta + (1.0 - 3 * delta) * j / grid;
                const double w2 = 1.0 - w0 - w1;
                if (w2 < delta - 1e-15) continue;
                for (int k = 0; k <= grid; ++k) {
                    const double m = static_cast<double>(k) / grid;
                    const double mean = w1 * 1.0 + w2 * m;
                    const double var = w0 * mean * mean + w1 * (1 - mean) * (1 - mean) + w2 * (m - mean) * (m - mean);
                    best = std::min(best, var);
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST(BellmanPointTest, DepthOneHaarWitness) {
    auto filt = build_dyadic(1);
    const Witness w = haar_witness(filt, 1);
    const BellmanPoint root = bellman_point(w.f, w.g, w.T, filt->root_id(), 2.0);
    EXPECT_NEAR(root.x1[0], 0.0, 1e-15);
    EXPECT_NEAR(root.x2, 0.0, 1e-15);
    EXPECT_NEAR(root.x3, 1.0, 1e-15);
    EXPECT_NEAR(root.x4, 1.0, 1e-15);
    const AtomId left = filt->root().children[0];
    const BellmanPoint l = bellman_point(w.f, w.g, w.T, left, 2.0);
    EXPECT_EQ(l.x1[0], 1.0);
    EXPECT_EQ(l.x2, 1.0);
    EXPECT_EQ(l.x3, 1.0);
    EXPECT_EQ(l.x4, 1.0);
}

TEST(BellmanPointTest, ZeroWitnessIsOrigin) {
    auto filt = build_dyadic(2);
    GundyOperator T = make_constant_transform(filt, HVec::Ones(2).normalized());
    const BellmanPoint x =
        bellman_point(MartFunction::zero(filt, 2), MartFunction::zero(filt, 1), T, filt->root_id(), 1.5);
    EXPECT_EQ(x.x1.norm(), 0.0);
    EXPECT_EQ(x.x2, 0.0);
    EXPECT_EQ(x.x3, 0.0);
    EXPECT_EQ(x.x4, 0.0);
}

TEST(BellmanPointTest, RejectsBadExponentAndAtom) {
    auto filt = build_dyadic(1);
    const Witness w = haar_witness(filt, 1);
    EXPECT_THROW(bellman_point(w.f, w.g, w.T, 0, 2.5), InvalidArgument);
    EXPECT_THROW(bellman_point(w.f, w.g, w.T, 17, 2.0), InvalidArgument);
}

TEST(OmegaP, Examples) {
    EXPECT_TRUE(omega_p_contains(pt({0.0}, 0, 0, 0)));
    EXPECT_FALSE(omega_p_contains(pt({1.0}, 0, 0.5, 1)));
    EXPECT_FALSE(omega_p_contains(pt({0.0}, -0.1, 1, 1)));
    EXPECT_FALSE(omega_p_contains(pt({0.0}, 2.0, 1, 1)));
}

TEST(OmegaP, WitnessPointsAlwaysInside) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto filt = fixture::random_filtration(seed, 1 + static_cast<int>(seed % 4));
        Rng rng = make_rng(seed, 11);
        const int dim = 1 + static_cast<int>(seed % 3);
        const double p = 1.1 + 0.9 * uniform01(rng);
        GundyOperator T = make_random_transform(filt, dim, rng);
        MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), dim));
        MartFunction g(filt, fixture::random_values(rng, filt->num_leaves(), 1));
        const MartFunction tg = adjoint_apply(T, g);
        for (const auto& at : filt->atoms()) {
            const BellmanPoint x = bellman_point(f, g, tg, at.id, p);
            EXPECT_TRUE(omega_p_contains(x)) << "seed " << seed << " atom " << at.id;
        }
    }
}

TEST(B2Slack, DegenerateConfigurationHasZeroSlack) {
    const CandidateBellman B = quadratic_candidate();
    const BellmanPoint x = pt({0.3, -0.2}, 0.5, 1.0, 2.0);
    const B2Config c = make_b2_config({x, x, x}, {0.25, 0.25, 0.5}, 0.0);
    EXPECT_NEAR(check_b2_config(B, c), 0.0, 1e-15);
    EXPECT_NEAR(check_b2_config(linear_candidate(1.0, 2.0), c), 0.0, 1e-15);
}

TEST(B2Slack, LinearCandidateFailsByTheJump) {
    const CandidateBellman B = linear_candidate(1.0, 2.0);
    const B2Config c = make_b2_config({pt({0.0}, 1, 1, 1), pt({1.0}, 1, 1, 1)}, {0.5, 0.5}, 1.0);
    EXPECT_DOUBLE_EQ(check_b2_config(B, c), -1.0);
}

TEST(B2Slack, RejectsPointsOutsideOmega) {
    const CandidateBellman B = quadratic_candidate();
    B2Config c = make_b2_config({pt({0.0}, 1, 1, 1), pt({1.0}, 1, 1, 1)}, {0.5, 0.5}, 0.0);
    c.points[1].x3 = 0.1;
    EXPECT_THROW(check_b2_config(B, c), InvalidArgument);
}

TEST(Sampler, HalfFloorAlwaysGivesTwoPoints) {
    for (const auto& c : sample_b2_configs({.delta = 0.5, .count = 200, .seed = 3})) EXPECT_EQ(c.points.size(), 2u);
}

TEST(Sampler, WeightsRespectTheFloorAndInvariants) {
    const auto cs = sample_b2_configs({.delta = 0.25, .count = 1000, .seed = 4, .dim = 3});
    std::size_t max_n = 0;
    for (const auto& c : cs) {
        for (double w : c.weights) EXPECT_GE(w, 0.25 - 1e-12);
        EXPECT_NO_THROW(validate_b2_config(c, 0.25));
        EXPECT_TRUE(omega_p_contains(c.base));
        max_n = std::max(max_n, c.points.size());
    }
    EXPECT_EQ(max_n, 4u);
}

TEST(Sampler, ForcedZeroDisplacementGivesExactCombination) {
    for (const auto& c : sample_b2_configs({.delta = 0.1, .count = 100, .seed = 5, .force_zero_d = true})) {
        const BellmanPoint mix = combine(c.points, c.weights);
        EXPECT_EQ(c.d, 0.0);
        EXPECT_EQ(c.base.x1, mix.x1);
        EXPECT_EQ(c.base.x2, mix.x2);
        EXPECT_EQ(c.base.x3, mix.x3);
        EXPECT_EQ(c.base.x4, mix.x4);
    }
}

TEST(Sampler, RejectsBadOptions) {
    EXPECT_THROW(sample_b2_configs({.delta = 0.6, .count = 1}), InvalidArgument);
    EXPECT_THROW(sample_b2_configs({.delta = 0.25, .count = 1, .dyadic_bits = 17}), InvalidArgument);
    EXPECT_THROW(sample_b2_configs({.delta = 0.25, .p = 2.5, .count = 1}), InvalidArgument);
}

TEST(Sampler, DyadicWeightsAreExact) {
    for (const auto& c : sample_b2_configs({.delta = 0.1, .count = 300, .seed = 6, .dyadic_bits = 5})) {
        double total = 0.0;
        for (double w : c.weights) {
            EXPECT_EQ(std::ldexp(w, 5), std::round(std::ldexp(w, 5)));
            EXPECT_GE(w, 0.1);
            total += w;
        }
        EXPECT_EQ(total, 1.0);
    }
}

TEST(Sampler, DeterministicPerSeed) {
    const auto a = sample_b2_configs({.delta = 0.25, .p = 1.5, .count = 50, .seed = 9});
    const auto b = sample_b2_configs({.delta = 0.25, .p = 1.5, .count = 50, .seed = 9});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
}

TEST(QuadraticCandidate, PassesHalfFloorSampling) {
    const CandidateBellman B = quadratic_candidate();
    for (int dim : {1, 2, 4}) {
        for (const auto& c : sample_b2_configs({.delta = 0.5, .count = 2000, .seed = 12, .dim = dim})) {
            EXPECT_GE(check_b2_config(B, c), -1e-9 * b2_scale(B, c));
        }
    }
}

TEST(QuadraticCandidate, RescaledVersionsPassTheirFloors) {
    for (double delta : {0.1, 0.25, 1.0 / 3.0, 0.4}) {
        const CandidateBellman B = quadratic_candidate(delta);
        for (const auto& c : sample_b2_configs({.delta = delta, .count = 2000, .seed = 13, .dim = 2})) {
            EXPECT_GE(check_b2_config(B, c), -1e-9 * b2_scale(B, c)) << "delta " << delta;
        }
    }
}

TEST(QuadraticCandidate, BoundaryValuesAreNonnegative) {
    const CandidateBellman B = quadratic_candidate();
    Rng rng = make_rng(14);
    for (int i = 0; i < 2000; ++i) {
        HVec x1 = random_hvec(rng, 2, std::exp(uniform(rng, -2.0, 2.0)));
        const double x2 = std::exp(uniform(rng, -3.0, 3.0));
        const double x4 = x2 + standard_exponential(rng);
        EXPECT_GE(B(make_point(x1, x2, x1.squaredNorm(), x4, 2.0)), -1e-9);
    }
}

TEST(QuadraticCandidate, RescaleConstantMatchesGridSearch) {
    for (double delta : {0.1, 0.2, 0.25, 0.3, 1.0 / 3.0, 0.4, 0.5}) {
        const double brute = 1.0 / (2.0 * std::sqrt(brute_min_normalized_variance(delta, 200)));
        const double exact = quadratic_rescale_constant(delta);
        EXPECT_LE(brute, exact * (1 + 1e-12)) << "delta " << delta;
        EXPECT_NEAR(brute, exact, 2e-3 * exact) << "delta " << delta;
    }
    EXPECT_EQ(quadratic_rescale_constant(0.5), 1.0);
    EXPECT_NEAR(quadratic_rescale_constant(0.25), std::sqrt(2.0), 1e-15);
}

TEST(DyadicExpand, TwoEqualWeightsGiveRatioOne) {
    const B2Config c = make_b2_config({pt({0.0, 0.0}, 1, 1, 2), pt({3.0, 4.0}, 1, 25, 2)}, {0.5, 0.5}, 0.5);
    const auto cert = dyadic_expand(c);
    EXPECT_EQ(cert.bits, 1);
    EXPECT_FALSE(cert.degenerate);
    EXPECT_NEAR(cert.separation, 5.0, 1e-15);
    EXPECT_NEAR(cert.ratio, 1.0, 1e-15);
}

TEST(DyadicExpand, QuarterThreeQuartersGivesRatioOneHalf) {
    const double D = 2.5;
    const B2Config c = make_b2_config({pt({0.0}, 1, 1, 2), pt({D}, 1, D * D, 2)}, {0.25, 0.75}, 0.3);
    const auto cert = dyadic_expand(c);
    ASSERT_EQ(cert.bits, 2);
    EXPECT_NEAR(cert.root.children[0].point.x1[0], D / 2, 1e-12);
    EXPECT_NEAR(cert.root.children[1].point.x1[0], D, 1e-12);
    EXPECT_NEAR(cert.separation, D / 2, 1e-12);
    EXPECT_NEAR(cert.ratio, 0.5, 1e-12);
}

TEST(DyadicExpand, SortedHalvesMaximizeSeparationForCollinearPoints) {
    Rng rng = make_rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BellmanPoint> pts;
        const HVec dir = random_hvec(rng, 2).normalized();
        for (int k = 0; k < 3; ++k) {
            const HVec x1 = dir * uniform(rng, -2.0, 2.0);
            pts.push_back(make_point(x1, 0.5, x1.squaredNorm() + 0.1, 1.0, 2.0));
        }
        const B2Config c = make_b2_config(pts, {0.25, 0.25, 0.5}, 0.2);
        const auto cert = dyadic_expand(c);
        // Brute force: every split of the four copies {0, 1, 2, 2} into two pairs.
        std::vector<std::size_t> copies{0, 1, 2, 2};
        double best = 0.0;
        std::sort(copies.begin(), copies.end());
        do {
            const HVec m1 = (pts[copies[0]].x1 + pts[copies[1]].x1) / 2;
            const HVec m2 = (pts[copies[2]].x1 + pts[copies[3]].x1) / 2;
            best = std::max(best, (m1 - m2).norm());
        } while (std::next_permutation(copies.begin(), copies.end()));
        EXPECT_NEAR(cert.separation, best, 1e-12);
        EXPECT_GT(cert.ratio, 0.0);
        EXPECT_GE(cert.separation + 1e-12, cert.projected_separation);
    }
}

TEST(DyadicExpand, DegenerateAndNonDyadicInputs) {
    const BellmanPoint x = pt({1.0}, 0.5, 1.0, 1.0);
    EXPECT_TRUE(dyadic_expand(make_b2_config({x, x}, {0.5, 0.5}, 0.0)).degenerate);
    const B2Config bad = make_b2_config({x, pt({0.0}, 0.5, 1.0, 1.0)}, {0.3, 0.7}, 0.0);
    EXPECT_THROW(dyadic_expand(bad), InvalidArgument);
}

TEST(DyadicExpand, RecombinationMatchesDirectSlack) {
    const CandidateBellman B = quadratic_candidate();
    for (double delta : {0.1, 0.25, 1.0 / 3.0, 0.5}) {
        for (const auto& c : sample_b2_configs({.delta = delta, .count = 300, .seed = 16, .dim = 2, .dyadic_bits = 6})) {
            const auto cert = dyadic_expand(c);
            if (cert.degenerate) continue;
            EXPECT_GT(cert.ratio, 0.0);
            EXPECT_LE(cert.ratio, 1.0 + 1e-12);
            const auto chk = recombine_expansion(B, c, cert);
            EXPECT_NEAR(chk.recombined, chk.direct, 1e-9 * std::max(1.0, b2_scale(B, c) / cert.ratio));
            // Each midpoint node is a (B2) instance with d = 0 and equal weights.
            EXPECT_GE(chk.midpoint_slack, -1e-9 * b2_scale(B, c));
        }
    }
}

TEST(RescaleConstant, IdentityAtHalf) {
    const auto est = estimate_rescale_constant(quadratic_candidate(), {.delta = 0.5, .samples = 500, .seed = 1});
    EXPECT_EQ(est.constant, 1.0);
}

TEST(RescaleConstant, FiniteAndBelowTheExactValueForSmallerFloors) {
    for (double delta : {0.25, 0.1}) {
        const auto est = estimate_rescale_constant(quadratic_candidate(), {.delta = delta, .samples = 500, .seed = 2});
        EXPECT_GE(est.constant, 1.0);
        EXPECT_LE(est.constant, quadratic_rescale_constant(delta) * 1.05);
        ASSERT_FALSE(est.failures.empty());
        EXPECT_EQ(est.failures.back().second, 0u);
    }
}

TEST(RescaleConstant, LinearCandidateHasNone) {
    EXPECT_THROW(estimate_rescale_constant(linear_candidate(1.0, 2.0), {.delta = 0.25, .samples = 50, .seed = 3}),
                 ComputationError);
}

TEST(Homogeneity, WitnessOrbitMapsPoints) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto filt = fixture::random_filtration(seed, 3);
        Rng rng = make_rng(seed, 17);
        const double p = 1.1 + 0.9 * uniform01(rng);
        const double lambda = std::exp(uniform(rng, -2.0, 2.0));
        GundyOperator T = make_random_transform(filt, 2, rng);
        MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), 2));
        MartFunction g(filt, fixture::random_values(rng, filt->num_leaves(), 1));
        const MartFunction fl = f * lambda;
        const MartFunction gl = g * (1 / lambda);
        for (const auto& at : filt->atoms()) {
            const BellmanPoint x = bellman_point(f, g, T, at.id, p);
            const BellmanPoint y = bellman_point(fl, gl, T, at.id, p);
            const BellmanPoint z = homogeneity_orbit(x, lambda);
            // x1 and x2 errors are relative to the uncancelled magnitudes.
            const double s1 = std::sqrt(average_pow(fl, at.id, 2.0));
            const double s2 = average_pow(gl, at.id, 2.0);
            EXPECT_LE((y.x1 - z.x1).norm(), 1e-12 * s1);
            EXPECT_NEAR(y.x2, z.x2, 1e-11 * s2);
            EXPECT_NEAR(y.x3, z.x3, 1e-12 * z.x3);
            EXPECT_NEAR(y.x4, z.x4, 1e-12 * z.x4);
        }
    }
}

TEST(B2ConfigJson, RoundTrip) {
    for (const auto& c : sample_b2_configs({.delta = 0.25, .p = 1.5, .count = 20, .seed = 18})) {
        const B2Config d = b2_config_from_json(to_json(c), 1.5);
        EXPECT_EQ(to_json(d).dump(), to_json(c).dump());
    }
}
