#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "alloclab/point_process.hpp"

using namespace alloclab;

TEST(Rng, SplitmixReference) {
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(derive_seed(7, 3), splitmix64(7 ^ 3));
    EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
}

TEST(Rng, Uniform01InUnitInterval) {
    auto rng = make_rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = uniform01(rng);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Poisson, SameSeedSameConfiguration) {
    const Domain dom(2, 10.0, 0.5);
    const auto a = sample_poisson(dom, 1.5, 42);
    const auto b = sample_poisson(dom, 1.5, 42);
    EXPECT_EQ(a.points.coords(), b.points.coords());
    EXPECT_NE(a.points.coords(), sample_poisson(dom, 1.5, 43).points.coords());
}

TEST(Poisson, CountMeanAndVariance) {
    const Domain dom(2, 10.0, 0.5);
    const int reps = 2000;
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto n = static_cast<double>(sample_poisson(dom, 1.0, derive_seed(11, r)).size());
        s += n;
        s2 += n * n;
    }
    const double mean = s / reps, var = s2 / reps - mean * mean;
    // mean 100, standard error about 0.22; variance standard error about 3.2
    EXPECT_NEAR(mean, 100.0, 1.0);
    EXPECT_NEAR(var, 100.0, 15.0);
}

TEST(Poisson, PointsInsideWindow) {
    const Domain dom(3, 4.0, 0.2);
    const auto cs = sample_poisson(dom, 2.0, 5);
    EXPECT_EQ(cs.d(), 3);
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (double v : cs.points[i]) {
            EXPECT_GE(v, 0.0);
            EXPECT_LT(v, 4.0);
        }
}

TEST(Poisson, VoidProbabilityOfSmallBox) {
    // box [0,0.1) x [0,0.05) has volume 0.005
    const Domain dom(2, 5.0, 0.25);
    const int reps = 20000;
    int empty = 0;
    for (int r = 0; r < reps; ++r) {
        const auto cs = sample_poisson(dom, 1.0, derive_seed(12, r));
        bool hit = false;
        for (std::size_t i = 0; i < cs.size() && !hit; ++i) hit = cs.points[i][0] < 0.1 && cs.points[i][1] < 0.05;
        empty += hit ? 0 : 1;
    }
    const double p = static_cast<double>(empty) / reps;
    const double se = std::sqrt(p * (1.0 - p) / reps);
    EXPECT_NEAR(p, std::exp(-0.005), 4.0 * se + 1e-4);
}

TEST(Poisson, DisjointSubBoxCountsUncorrelated) {
    const Domain dom(1, 10.0, 0.5);
    const int reps = 4000;
    double sa = 0, sb = 0, sab = 0;
    for (int r = 0; r < reps; ++r) {
        const auto cs = sample_poisson(dom, 1.0, derive_seed(13, r));
        double a = 0, b = 0;
        for (std::size_t i = 0; i < cs.size(); ++i) (cs.points[i][0] < 5.0 ? a : b) += 1.0;
        sa += a;
        sb += b;
        sab += a * b;
    }
    const double cov = sab / reps - (sa / reps) * (sb / reps);
    // covariance standard error is about 5/sqrt(4000)
    EXPECT_NEAR(cov, 0.0, 0.4);
}

TEST(Poisson, RejectsBadIntensity) {
    const Domain dom(1, 10.0, 0.5);
    EXPECT_THROW(sample_poisson(dom, 0.0, 1), InvalidInput);
    EXPECT_THROW(sample_poisson(dom, -1.0, 1), InvalidInput);
    EXPECT_THROW(sample_poisson(dom, std::nan(""), 1), InvalidInput);
}

TEST(Palm, AddsOriginFirst) {
    const Domain dom(2, 10.0, 0.5);
    const auto cs = sample_poisson(dom, 1.0, 9);
    const auto p = palm_augment(cs);
    EXPECT_TRUE(p.palm);
    ASSERT_EQ(p.size(), cs.size() + 1);
    EXPECT_TRUE(is_origin(p.points[0]));
    for (std::size_t i = 0; i < cs.size(); ++i)
        EXPECT_TRUE(std::equal(cs.points[i].begin(), cs.points[i].end(), p.points[i + 1].begin()));
    EXPECT_THROW(palm_augment(p), InvalidInput);
}

TEST(Renewal, PalmWalkHasUnitDensityAndOrigin) {
    double total = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        const auto cs = sample_renewal_palm(200.0, IncrementLaw::uniform(), derive_seed(14, r));
        ASSERT_TRUE(cs.palm);
        ASSERT_TRUE(is_origin(cs.points[0]));
        EXPECT_DOUBLE_EQ(cs.side, 400.0);
        EXPECT_TRUE(std::isfinite(cs.seam_gap));
        EXPECT_GE(cs.seam_gap, 0.0);
        total += static_cast<double>(cs.size());
    }
    EXPECT_NEAR(total / reps, 400.0, 4.0);
}

TEST(Renewal, DeterministicLawIsALattice) {
    const auto cs = sample_renewal_palm(10.0, IncrementLaw::deterministic(), 1);
    std::vector<double> xs;
    for (std::size_t i = 0; i < cs.size(); ++i) xs.push_back(cs.points[i][0]);
    std::sort(xs.begin(), xs.end());
    ASSERT_EQ(xs.size(), 20u);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_DOUBLE_EQ(xs[i], static_cast<double>(i));
}

TEST(Renewal, GapDispersionMatchesLaw) {
    for (const auto& law : {IncrementLaw::exponential(), IncrementLaw::uniform(), IncrementLaw::gamma(4.0)}) {
        const auto cs = sample_renewal_palm(20000.0, law, 15);
        std::vector<double> xs;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const double x = cs.points[i][0];
            if (x < 20000.0) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        double s = 0, s2 = 0;
        for (std::size_t i = 1; i < xs.size(); ++i) {
            const double g = xs[i] - xs[i - 1];
            s += g;
            s2 += g * g;
        }
        const double n = static_cast<double>(xs.size() - 1);
        const double var = s2 / n - (s / n) * (s / n);
        EXPECT_NEAR(s / n, 1.0, 0.03) << law.name();
        EXPECT_NEAR(var, law.variance(), 0.1 * law.variance() + 0.01) << law.name();
    }
}

TEST(Renewal, RejectsNonUnitMeanAndNegativeSupport) {
    EXPECT_THROW(sample_renewal_palm(10.0, IncrementLaw::uniform(0.0, 3.0), 1), InvalidInput);
    EXPECT_THROW(sample_renewal_palm(10.0, IncrementLaw::uniform(-1.0, 3.0), 1), InvalidInput);
    EXPECT_THROW(sample_renewal_palm(-1.0, IncrementLaw::exponential(), 1), InvalidInput);
}

TEST(IncrementLaw, ParsesNames) {
    EXPECT_EQ(IncrementLaw::parse("exponential").kind, IncrementLaw::Kind::Exponential);
    EXPECT_DOUBLE_EQ(IncrementLaw::parse("gamma4").variance(), 0.25);
    const auto u = IncrementLaw::parse("uniform(0.5,1.5)");
    EXPECT_DOUBLE_EQ(u.a, 0.5);
    EXPECT_DOUBLE_EQ(u.b, 1.5);
    EXPECT_DOUBLE_EQ(IncrementLaw::parse("deterministic(1)").mean(), 1.0);
    EXPECT_THROW(IncrementLaw::parse("cauchy"), InvalidInput);
    EXPECT_THROW(IncrementLaw::parse("uniform(1"), InvalidInput);
}

TEST(Coupled, HighContainsBase) {
    const Domain dom(2, 10.0, 0.5);
    const auto [base, high] = sample_coupled(dom, 1.5, 77);
    ASSERT_GE(high.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i)
        EXPECT_TRUE(std::equal(base.points[i].begin(), base.points[i].end(), high.points[i].begin()));
    EXPECT_THROW(sample_coupled(dom, 1.0, 1), InvalidInput);
}

TEST(Coupled, ExtraMeanMatchesIntensityGap) {
    // beta = 0.2 on a 10 x 10 window: 20 extra points on average
    const Domain dom(2, 10.0, 0.5);
    const int reps = 1000;
    double s = 0;
    for (int r = 0; r < reps; ++r) {
        const auto [base, high] = sample_coupled(dom, 1.2, derive_seed(16, r));
        s += static_cast<double>(high.size() - base.size());
    }
    EXPECT_NEAR(s / reps, 20.0, 0.6);
}

TEST(Coupled, FamilyIsNested) {
    const Domain dom(1, 100.0, 1.0);
    const auto fam = sample_coupled_family(dom, 1.5, 3);
    std::size_t prev = 0;
    for (double lam : {1.0, 1.1, 1.25, 1.5}) {
        const auto cs = fam.at(lam);
        EXPECT_GE(cs.size(), prev);
        prev = cs.size();
    }
    EXPECT_EQ(fam.at(1.0).size(), fam.base.size());
    EXPECT_EQ(fam.at(1.5).size(), fam.base.size() + fam.extra.size());
    EXPECT_THROW(fam.at(1.6), InvalidInput);
}

TEST(CenterSetJson, RoundTrip) {
    const Domain dom(2, 10.0, 0.5);
    const auto cs = palm_augment(sample_poisson(dom, 1.0, 21));
    const auto back = center_set_from_json(nlohmann::json::parse(to_json(cs).dump()));
    EXPECT_EQ(back.points.coords(), cs.points.coords());
    EXPECT_EQ(back.side, cs.side);
    EXPECT_EQ(back.palm, cs.palm);
    EXPECT_EQ(back.seed, cs.seed);
}

TEST(CenterSetJson, RejectsMalformed) {
    auto j = to_json(sample_poisson(Domain(1, 10.0, 0.5), 1.0, 2));
    auto outside = j;
    outside["points"].push_back(std::vector<double>{11.0});
    EXPECT_THROW(center_set_from_json(outside), InvalidInput);
    auto wrongdim = j;
    wrongdim["points"].push_back(std::vector<double>{1.0, 2.0});
    EXPECT_THROW(center_set_from_json(wrongdim), InvalidInput);
    auto palm = j;
    palm["palm"] = true;
    palm["points"] = nlohmann::json::array({std::vector<double>{1.0}});
    EXPECT_THROW(center_set_from_json(palm), InvalidInput);
}
