#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "alloclab/rng.hpp"
#include "alloclab/stats.hpp"

using namespace alloclab;

TEST(Wilson, KnownInterval) {
    const auto ci = wilson(50, 100);
    EXPECT_NEAR(ci.lo, 0.3753, 1e-3);
    EXPECT_NEAR(ci.hi, 0.6247, 1e-3);
    EXPECT_EQ(wilson(0, 0).lo, 0.0);
    EXPECT_EQ(wilson(0, 0).hi, 1.0);
    EXPECT_EQ(wilson(0, 10).lo, 0.0);
    EXPECT_EQ(wilson(10, 10).hi, 1.0);
    EXPECT_THROW(wilson(3, 2), InvalidInput);
}

TEST(Wilson, ContainsEstimate) {
    for (std::uint64_t n : {1u, 7u, 100u, 5000u})
        for (std::uint64_t k = 0; k <= n; k += std::max<std::uint64_t>(1, n / 13)) {
            const auto ci = wilson(k, n);
            const double p = static_cast<double>(k) / static_cast<double>(n);
            EXPECT_LE(ci.lo, p + 1e-15);
            EXPECT_GE(ci.hi, p - 1e-15);
        }
}

TEST(Kolmogorov, Values) {
    EXPECT_EQ(kolmogorov_q(0.0), 1.0);
    EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 1e-3);
    EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 1e-3);
}

TEST(KsTwoSample, IdenticalAndShifted) {
    auto rng = make_rng(3);
    std::normal_distribution<double> g;
    std::vector<double> a, b, c;
    for (int i = 0; i < 3000; ++i) {
        a.push_back(g(rng));
        b.push_back(g(rng));
        c.push_back(g(rng) + 0.3);
    }
    EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
    EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
    EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
    EXPECT_THROW(ks_two_sample({}, a), InvalidInput);
}

TEST(KsTwoSample, TiedValuesStepTogether) {
    const std::vector<double> a{1, 1, 1, 2}, b{1, 2, 2, 2};
    EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.5);
}

TEST(Survival, CountsStrictlyAbove) {
    const auto s = survival_curve({0.5, 1.0, 1.0, 3.0, std::numeric_limits<double>::infinity()}, {0.0, 1.0, 2.0}, 10);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].survivors, 5u);
    EXPECT_EQ(s[1].survivors, 2u);
    EXPECT_EQ(s[2].survivors, 2u);
    EXPECT_DOUBLE_EQ(s[1].survival, 0.2);
    EXPECT_LE(s[1].ci.lo, 0.2);
}

TEST(LeastSquares, ExactLine) {
    const auto f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
    EXPECT_DOUBLE_EQ(f.slope, 2.0);
    EXPECT_DOUBLE_EQ(f.intercept, 1.0);
    EXPECT_DOUBLE_EQ(f.r2, 1.0);
    EXPECT_THROW(least_squares({1, 2}, {1}), InvalidInput);
}

TEST(TailModels, ParetoPrefersPowerLaw) {
    auto rng = make_rng(5);
    std::vector<double> s;
    for (int i = 0; i < 10000; ++i) s.push_back(std::pow(1.0 - uniform01(rng), -1.0 / 0.7));
    const auto c = compare_tail_models(s);
    EXPECT_TRUE(c.power_law_preferred());
    EXPECT_NEAR(c.power_law.parameter, 0.7, 0.07);
    EXPECT_GT(c.vuong_z, 0.0);
}

TEST(TailModels, ExponentialPrefersExponential) {
    auto rng = make_rng(6);
    std::exponential_distribution<double> e(0.5);
    std::vector<double> s;
    for (int i = 0; i < 10000; ++i) s.push_back(e(rng));
    s.push_back(std::numeric_limits<double>::infinity());
    const auto c = compare_tail_models(s);
    EXPECT_FALSE(c.power_law_preferred());
    EXPECT_TRUE(c.exponential.preferred);
    EXPECT_NEAR(c.exponential.parameter, 0.5, 0.05);
    EXPECT_EQ(c.power_law.n_tail, 1000u);
}

TEST(TailModels, RejectsTinySamples) {
    EXPECT_THROW(compare_tail_models({1, 2, 3}), InvalidInput);
    EXPECT_THROW(compare_tail_models(std::vector<double>(100, 1.0), 1.0), InvalidInput);
}
