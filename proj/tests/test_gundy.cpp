#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mbl;

namespace {

std::vector<Eigen::MatrixXd> multiplier_values(const GundyOperator& T) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& a : T.multipliers()) out.push_back(a.values());
    return out;
}

MartFunction haar(const FiltrationPtr& f) {
    const std::vector<double> v{1.0, -1.0};
    return MartFunction::scalar(f, v);
}

}  // namespace

TEST(Transform, ZeroMultipliersGiveZeroOperator) {
    auto filt = fixture::random_filtration(1, 3);
    GundyOperator T = make_constant_transform(filt, HVec::Zero(2));
    Rng rng = make_rng(1);
    MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), 2));
    EXPECT_EQ(apply(T, f).values().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(operator_norm(T), 0.0);
}

TEST(Transform, UnitMultiplierTelescopes) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto filt = fixture::random_filtration(seed, 4);
        GundyOperator T = make_constant_transform(filt, HVec::Ones(1));
        Rng rng = make_rng(seed);
        MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), 1));
        const MartFunction want = f - cond_exp_level(f, 0);
        EXPECT_LT((apply(T, f) - want).values().cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((apply_matrix(T, f) - want).values().cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Transform, DepthOneHaarIsFixed) {
    auto filt = build_dyadic(1);
    GundyOperator T = make_constant_transform(filt, HVec::Ones(1));
    EXPECT_EQ(apply(T, haar(filt)).values(), haar(filt).values());
    EXPECT_EQ(apply(T, MartFunction::zero(filt, 1)).values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Transform, MatrixMatchesDenseProjectionOracle) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        auto filt = fixture::random_filtration(seed, 3);
        Rng rng = make_rng(seed, 7);
        GundyOperator T = make_random_transform(filt, 2, rng);
        const Eigen::MatrixXd M = oracle::transform_matrix(*filt, multiplier_values(T));
        EXPECT_LT((M - T.matrix()).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
    }
}

TEST(Transform, MultiplierAndMatrixRoutesAgree) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto filt = fixture::random_filtration(seed, 4);
        Rng rng = make_rng(seed, 8);
        const int dim = 1 + static_cast<int>(seed % 3);
        GundyOperator T = make_random_transform(filt, dim, rng);
        MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), dim));
        EXPECT_LE((apply(T, f) - apply_matrix(T, f)).values().norm(), 1e-10 * std::max(1.0, f.values().norm()));
    }
}

TEST(Transform, RejectsNonPredictableMultiplier) {
    auto filt = build_dyadic(2);
    std::vector<MartFunction> mult{MartFunction::constant(filt, HVec::Ones(1)),
                                   MartFunction::constant(filt, HVec::Ones(1))};
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(4, 1);
    v(0, 0) = 0.5;  // leaves 0 and 1 share an atom of A_1
    mult[1] = MartFunction(filt, v);
    EXPECT_THROW(make_transform(filt, mult), InvalidArgument);
}

TEST(Transform, RejectsMultiplierAboveUnitNorm) {
    auto filt = build_dyadic(1);
    EXPECT_THROW(make_constant_transform(filt, HVec::Constant(2, 0.8)), InvalidArgument);
}

TEST(Adjoint, DepthOneIsCentering) {
    auto filt = build_dyadic(1);
    GundyOperator T = make_constant_transform(filt, HVec::Ones(1));
    const std::vector<double> vals{3.0, -0.5};
    const MartFunction g = MartFunction::scalar(filt, vals);
    const MartFunction tg = adjoint_apply(T, g);
    EXPECT_NEAR(tg.value(0)[0], 3.0 - 1.25, 1e-15);
    EXPECT_NEAR(tg.value(1)[0], -0.5 - 1.25, 1e-15);
    EXPECT_EQ(adjoint_apply(T, MartFunction::zero(filt, 1)).values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adjoint, DefiningRelationAndClosedForm) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto filt = fixture::random_filtration(seed, 4);
        Rng rng = make_rng(seed, 9);
        const int dim = 1 + static_cast<int>(seed % 3);
        GundyOperator T = make_random_transform(filt, dim, rng);
        MartFunction f(filt, fixture::random_values(rng, filt->num_leaves(), dim));
        MartFunction g(filt, fixture::random_values(rng, filt->num_leaves(), 1));
        const double scale = l2_norm(f) * l2_norm(g);
        EXPECT_LE(std::abs(inner(g, apply(T, f)) - inner(adjoint_apply(T, g), f)), 1e-10 * scale);
        EXPECT_LE((adjoint_apply(T, g) - adjoint_closed_form(T, g)).values().norm(),
                  1e-10 * std::max(1.0, g.values().norm()));
    }
}

TEST(OperatorNorm, DepthOneUnitMultiplierIsOne) {
    GundyOperator T = make_constant_transform(build_dyadic(1), HVec::Ones(1));
    EXPECT_NEAR(operator_norm(T), 1.0, 1e-12);
}

TEST(OperatorNorm, MatchesPowerIterationAndStaysBelowOne) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto filt = fixture::random_filtration(seed, 1 + static_cast<int>(seed % 4));
        Rng rng = make_rng(seed, 10);
        GundyOperator T = make_random_transform(filt, 1 + static_cast<int>(seed % 3), rng);
        const double n = operator_norm(T);
        EXPECT_LE(n, 1.0 + 1e-9) << "seed " << seed;
        EXPECT_NEAR(n, oracle::power_norm(T.matrix(), filt->leaf_weights()), 1e-6) << "seed " << seed;
    }
}

TEST(PredictableSupport, DetectsSupportEvents) {
    auto filt = build_dyadic(2);
    // Delta_2 lives only on the left half: support {[0, 1/2)} at n = 2, nothing at n = 1.
    const std::vector<double> v{1.0, -1.0, 0.0, 0.0};
    const auto sup = predictable_support(MartFunction::scalar(filt, v));
    ASSERT_EQ(sup.size(), 2u);
    EXPECT_TRUE(sup[0].empty());
    ASSERT_EQ(sup[1].size(), 1u);
    EXPECT_EQ(filt->atom(sup[1][0]).b, 0.5);
}

TEST(GundyJson, RoundTrip) {
    auto filt = fixture::random_filtration(4, 3);
    Rng rng = make_rng(4);
    GundyOperator T = make_random_transform(filt, 2, rng);
    GundyOperator U = gundy_from_json(to_json(T), filt);
    EXPECT_EQ(U.matrix(), T.matrix());
    EXPECT_EQ(U.norm(), T.norm());
}
