#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "alloclab/analytic_bounds.hpp"
#include "alloclab/rng.hpp"
#include "alloclab/stats.hpp"

using namespace alloclab;

TEST(Q, Examples) {
    EXPECT_EQ(q(1.0), 0.0);
    EXPECT_NEAR(q(0.5), 0.386294, 1e-6);
    EXPECT_NEAR(q(2.0), 0.153426, 1e-6);
    EXPECT_NEAR(q(1.5), 0.063023, 1e-6);
    EXPECT_NEAR(q(0.25), 2.545177, 1e-6);
    EXPECT_NEAR(q(5.0), 0.478112, 1e-6);
    EXPECT_THROW(q(0.0), InvalidInput);
    EXPECT_THROW(q(-1.0), InvalidInput);
}

TEST(Q, DecreasesThenIncreases) {
    double prev = q(0.01);
    for (double x = 0.02; x < 1.0; x += 0.01) {
        EXPECT_LT(q(x), prev);
        prev = q(x);
    }
    prev = q(1.0);
    for (double x = 1.01; x < 50.0; x += 0.01) {
        EXPECT_GT(q(x), prev);
        prev = q(x);
    }
}

TEST(PoissonTail, UpperExampleAgainstExactTail) {
    EXPECT_NEAR(poisson_tail_upper(4.0, 8.0), 0.21327, 1e-5);
    EXPECT_NEAR(poisson_sf(4.0, 8), 0.05113, 1e-5);
    EXPECT_LE(poisson_sf(4.0, 8), poisson_tail_upper(4.0, 8.0));
    EXPECT_NEAR(poisson_tail_upper(4.0, 4.0 + 1e-9), 1.0, 1e-6);
}

TEST(PoissonTail, LowerExampleAgainstExactTail) {
    EXPECT_NEAR(poisson_tail_lower(10.0, 2.0), std::exp(-10.0 * 0.4781124), 1e-6);
    EXPECT_LE(poisson_cdf(10.0, 2), poisson_tail_lower(10.0, 2.0));
}

TEST(PoissonTail, DominatesExactTailsOnAGrid) {
    for (double g : {0.5, 2.0, 7.5, 30.0}) {
        for (long k = static_cast<long>(g) + 1; k < static_cast<long>(4 * g) + 10; ++k)
            EXPECT_LE(poisson_sf(g, k), poisson_tail_upper(g, static_cast<double>(k)) + 1e-15);
        for (long k = 1; k < static_cast<long>(g); ++k)
            EXPECT_LE(poisson_cdf(g, k), poisson_tail_lower(g, static_cast<double>(k)) + 1e-15);
    }
}

TEST(PoissonTail, RejectsBadOrdering) {
    EXPECT_THROW(poisson_tail_upper(4.0, 3.0), InvalidInput);
    EXPECT_THROW(poisson_tail_upper(0.0, 3.0), InvalidInput);
    EXPECT_THROW(poisson_tail_lower(4.0, 5.0), InvalidInput);
    EXPECT_THROW(poisson_tail_lower(4.0, 0.0), InvalidInput);
}

TEST(ExtremeAlpha, SupremumExamples) {
    EXPECT_NEAR(extreme_alpha_supremum(1, 3.0, TailTarget::X), 0.126046, 1e-6);
    EXPECT_NEAR(extreme_alpha_supremum(1, 0.125, TailTarget::RStar), 4.0 * q(0.25), 1e-12);
    EXPECT_THROW(extreme_alpha_supremum(1, 2.0, TailTarget::X), NotApplicable);
    EXPECT_THROW(extreme_alpha_supremum(2, 4.0, TailTarget::X), NotApplicable);
    EXPECT_THROW(extreme_alpha_supremum(1, 0.5, TailTarget::RStar), NotApplicable);
}

TEST(ExtremeAlpha, TheoremFormUsesFractionOfSupremum) {
    const double c = 0.99 * extreme_alpha_supremum(1, 3.0, TailTarget::X);
    EXPECT_DOUBLE_EQ(bound_extreme_alpha(1, 3.0, 10.0, TailTarget::X), std::exp(-c * 10.0));
}

TEST(ExtremeAlpha, ProofFormAssembly) {
    // X: Z ~ Poisson(2r), threshold 2r * 2 / 3
    const double r = 7.0;
    EXPECT_NEAR(bound_extreme_alpha(1, 3.0, r, TailTarget::X, BoundForm::Proof),
                poisson_tail_lower(2.0 * r, 4.0 * r / 3.0), 1e-15);
    // R*: Z' - 1 ~ Poisson(4r), threshold 2r / alpha - 1
    EXPECT_NEAR(bound_extreme_alpha(1, 0.125, r, TailTarget::RStar, BoundForm::Proof),
                poisson_tail_upper(4.0 * r, 16.0 * r - 1.0), 1e-15);
    EXPECT_EQ(bound_extreme_alpha(1, 0.125, 0.01, TailTarget::RStar, BoundForm::Proof), 1.0);
}

TEST(Oned, Examples) {
    EXPECT_DOUBLE_EQ(bound_1d(0.5, 0.0, TailTarget::X), 4.0);
    EXPECT_DOUBLE_EQ(bound_1d(0.5, 0.0, TailTarget::RStar), 8.0);
    EXPECT_NEAR(bound_1d(0.5, 1.0, TailTarget::RStar), 8.0 * std::exp(-0.386294), 1e-5);
    EXPECT_NEAR(bound_1d(2.0, 20.0, TailTarget::X), 0.0930, 2e-4);
    EXPECT_THROW(bound_1d(1.0, 2.0, TailTarget::X), NotApplicable);
    EXPECT_THROW(bound_1d(0.5, -1.0, TailTarget::X), InvalidInput);
}

TEST(CriticalShape, Examples) {
    EXPECT_NEAR(kCriticalTailExponent, 0.0568182, 1e-7);
    EXPECT_NEAR(kCriticalMomentExponent, 0.0555556, 1e-7);
    EXPECT_NEAR(critical_shape(10.0), 0.8774, 1e-4);
    EXPECT_THROW(critical_shape(1.0), NotApplicable);
}

TEST(WalkTheta, Value) { EXPECT_NEAR(walk_theta_bound(), 0.94264, 1e-5); }

TEST(PathDeviation, Examples) {
    EXPECT_DOUBLE_EQ(pp_deviation_bound(2.0, 0.0, 0.0), 1.0);
    EXPECT_NEAR(pp_deviation_bound(2.0, 5.0, 1.0), 0.4312, 1e-4);
    EXPECT_THROW(pp_deviation_bound(1.0, 5.0, 1.0), NotApplicable);
    EXPECT_THROW(pp_deviation_bound(2.0, -5.0, 1.0), InvalidInput);
}

TEST(PathDeviation, DominatesSimulatedFrequency) {
    // event: N(0,t] <= t + a for some t >= r. Between arrivals t - N(0,t] only grows, so the
    // event happens exactly when some arrival T_k > r has T_k > (k - 1) - a.
    const double lambda = 2.0, a = 1.0;
    const std::uint64_t reps = 20000;
    for (double r : {1.0, 2.0, 5.0}) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = 0; i < reps; ++i) {
            auto rng = make_rng(derive_seed(71, i));
            std::exponential_distribution<double> gap(lambda);
            double t = 0.0;
            bool hit = false;
            for (long k = 1; t < 200.0 && !hit; ++k) {
                t += gap(rng);
                hit = t > r && t > static_cast<double>(k - 1) - a;
            }
            hits += hit;
        }
        const auto ci = wilson(hits, reps);
        EXPECT_LE(ci.lo, pp_deviation_bound(lambda, r, a)) << "r=" << r;
    }
}

TEST(BoundCurve, NonincreasingInRadius) {
    std::vector<double> radii;
    for (double r = 0.0; r <= 40.0; r += 0.25) radii.push_back(r);
    const std::vector<BoundCurve> specs{
        {BoundKind::OnedX, 1, 0.5},
        {BoundKind::OnedR, 1, 2.0},
        {BoundKind::ExtremeAlphaX, 1, 3.0, 1.0, BoundForm::Proof},
        {BoundKind::ExtremeAlphaX, 2, 5.0, 1.0, BoundForm::Theorem},
        {BoundKind::ExtremeAlphaR, 1, 0.125, 1.0, BoundForm::Proof},
        {BoundKind::PoissonUpper, 1, 1.0, 3.0},
        {BoundKind::WalkTheta},
    };
    for (const auto& s : specs) {
        const auto c = make_bound_curve(s, radii);
        for (std::size_t i = 0; i < c.value.size(); ++i) {
            EXPECT_GE(c.value[i], 0.0);
            if (i > 0) EXPECT_LE(c.value[i], c.value[i - 1] + 1e-15) << to_string(s.kind) << " r=" << c.r[i];
        }
    }
}

TEST(BoundCurve, KindNamesRoundTrip) {
    for (auto k : {BoundKind::PoissonUpper, BoundKind::PoissonLower, BoundKind::ExtremeAlphaX, BoundKind::ExtremeAlphaR,
                   BoundKind::OnedX, BoundKind::OnedR, BoundKind::CriticalShape, BoundKind::WalkTheta})
        EXPECT_EQ(parse_bound_kind(to_string(k)), k);
    EXPECT_THROW(parse_bound_kind("gaussian"), InvalidInput);
}

TEST(BoundCurve, CsvHeaderAndRows) {
    const auto c = make_bound_curve({BoundKind::OnedX, 1, 2.0}, {0.0, 20.0});
    std::ostringstream os;
    write_bound_csv(os, c);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "r,bound");
    std::getline(is, line);
    EXPECT_EQ(line, "0,2");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 9), "20,0.0929");
}
