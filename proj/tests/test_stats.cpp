#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pwh/error.hpp"
#include "pwh/stats.hpp"

using namespace pwh;

TEST(TerrellScott, Examples) {
    EXPECT_EQ(terrell_scott_subbins(4), 2u);
    EXPECT_EQ(terrell_scott_subbins(13), 3u);
    EXPECT_EQ(terrell_scott_subbins(500), 10u);
    EXPECT_EQ(terrell_scott_subbins(2), 2u);
    try {
        terrell_scott_subbins(1);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_STREQ(e.what(), "uniformity test undefined");
    }
}

TEST(TerrellScott, MatchesCeilCubeRoot) {
    for (Count u = 2; u < 20000; ++u) {
        Count s = 1;
        while (s * s * s < 2 * u) ++s;
        ASSERT_EQ(terrell_scott_subbins(u), s) << u;
    }
}

TEST(RegularizedGamma, AgreesWithBoost) {
    for (double a : {0.5, 1.0, 2.5, 7.0, 30.0, 120.0})
        for (double x : {0.01, 0.7, 3.0, 10.0, 45.0, 160.0})
            EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-12) << a << " " << x;
}

TEST(ChiSquaredCritical, TableValues) {
    EXPECT_NEAR(chi_squared_critical(2, 0.001), 10.828, 1e-3);
    EXPECT_NEAR(chi_squared_critical(3, 0.001), 13.816, 1e-3);
    EXPECT_NEAR(chi_squared_critical(10, 0.001), 27.877, 1e-3);
    EXPECT_EQ(chi_squared_critical(5, 1.0), 0.0);
}

TEST(ChiSquaredCritical, AgreesWithBoostQuantile) {
    for (std::uint32_t s = 2; s <= 60; ++s) {
        for (double alpha : {0.1, 0.05, 0.01, 0.001}) {
            const boost::math::chi_squared dist(s - 1);
            const double want = boost::math::quantile(boost::math::complement(dist, alpha));
            ASSERT_NEAR(chi_squared_critical(s, alpha), want, 1e-8 * std::max(1.0, want)) << s << " " << alpha;
        }
    }
}

TEST(IsUniform, SpecExamples) {
    std::vector<Value> even, skewed, mild;
    for (int k = 0; k < 500; ++k) even.push_back(k % 100), even.push_back(100 + k % 100);
    for (int k = 0; k < 900; ++k) skewed.push_back(k % 100);
    for (int k = 0; k < 100; ++k) skewed.push_back(100 + k % 100);
    for (int k = 0; k < 520; ++k) mild.push_back(k % 100);
    for (int k = 0; k < 480; ++k) mild.push_back(100 + k % 100);
    // u = 4 gives s = 2 sub-bins of width 100 over [0, 200).
    EXPECT_DOUBLE_EQ(chi_squared_statistic(even, 0, 200, 2), 0.0);
    EXPECT_TRUE(is_uniform(even, 0, 200, 4, 0.001));
    EXPECT_DOUBLE_EQ(chi_squared_statistic(skewed, 0, 200, 2), 640.0);
    EXPECT_FALSE(is_uniform(skewed, 0, 200, 4, 0.001));
    EXPECT_DOUBLE_EQ(chi_squared_statistic(mild, 0, 200, 2), 1.6);
    EXPECT_TRUE(is_uniform(mild, 0, 200, 4, 0.001));
}

TEST(IsUniform, DegenerateBin) {
    std::vector<Value> v{1, 2};
    try {
        is_uniform(v, 5, 5, 2, 0.01);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_STREQ(e.what(), "degenerate bin");
    }
    EXPECT_NO_THROW(is_uniform(std::vector<Value>{5, 5}, 5, 5, 2, 0.01, true));
}

TEST(ChiSquaredStatistic, HandFormula) {
    // Sub-bins of width 10 over [0, 30): counts 5, 3, 1.
    std::vector<Value> v{0, 1, 2, 3, 9, 10, 15, 19, 29};
    const double e = 9.0 / 3.0;
    const double want = ((5 - e) * (5 - e) + (3 - e) * (3 - e) + (1 - e) * (1 - e)) / e;
    EXPECT_DOUBLE_EQ(chi_squared_statistic(v, 0, 30, 3), want);
}
