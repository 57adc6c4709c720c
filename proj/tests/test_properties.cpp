#include "mbl/suites.hpp"

#include <gtest/gtest.h>

#include <tuple>

using namespace mbl;

namespace {

using Cell = std::tuple<double, int>;

class SuiteProperty : public ::testing::TestWithParam<Cell> {};

}  // namespace

TEST_P(SuiteProperty, EverySuitePassesOnTenSeeds) {
    const auto [delta, dim] = GetParam();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Instance in = make_instance(corpus_filtration(delta, seed, 4), dim, seed);
        for (const auto& [name, fn] : all_suites()) {
            const SuiteResult r = fn(in, 1.0);
            EXPECT_TRUE(r.passed()) << name << " seed " << seed << ": " << r.first_failure;
            EXPECT_GT(r.checks, 0u) << name;
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Corpus, SuiteProperty,
                         ::testing::Combine(::testing::Values(0.1, 0.25, 1.0 / 3.0, 0.5), ::testing::Values(1, 2, 3)));

TEST(SuiteResultTest, RecordsTheFirstFailure) {
    SuiteResult r{"demo"};
    r.check(0.5, 1.0, "fine");
    r.check(2.0, 1.0, "first bad");
    r.check(3.0, 1.0, "second bad");
    EXPECT_EQ(r.checks, 3u);
    EXPECT_EQ(r.failures, 2u);
    EXPECT_DOUBLE_EQ(r.worst_ratio, 3.0);
    EXPECT_NE(r.first_failure.find("first bad"), std::string::npos);
    r.check(1.0, 0.0, "zero allowance");
    EXPECT_EQ(r.failures, 3u);
    r.check(std::nan(""), 1.0, "nan");
    EXPECT_EQ(r.failures, 4u);
    EXPECT_FALSE(r.passed());
}

TEST(SuiteResultTest, MergeKeepsEarliestFailure) {
    SuiteResult a{"a"};
    a.check(0.1, 1.0, "ok");
    SuiteResult b{"b"};
    b.check(5.0, 1.0, "bad in b");
    a.merge(b);
    EXPECT_EQ(a.checks, 2u);
    EXPECT_EQ(a.failures, 1u);
    EXPECT_NE(a.first_failure.find("bad in b"), std::string::npos);
}

TEST(CorpusFiltration, RespectsTheCellParameters) {
    for (double delta : {0.1, 0.25, 1.0 / 3.0, 0.5}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const FiltrationSpec s = corpus_filtration(delta, seed);
            const auto filt = build_filtration(s);
            EXPECT_LE(filt->depth(), 5);
            EXPECT_GE(regularity_delta(*filt), delta * (1 - 1e-12));
            for (const auto& at : filt->atoms()) EXPECT_LE(at.children.size(), 3u);
        }
    }
}
