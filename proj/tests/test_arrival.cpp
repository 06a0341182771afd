#include "oracles.hpp"

#include "phevdemand/arrival.hpp"
#include "phevdemand/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace phevdemand;
using namespace phevdemand::demand;

TEST(WrappedArrivalPmf, SumsToOneAndIsNonNegative) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mu(0.0, 24.0);
    std::uniform_real_distribution<double> log_var(std::log(0.01), std::log(200.0));
    for (int trial = 0; trial < 50; ++trial) {
        const auto dist = ArrivalTimeDist::wrapped_normal(mu(rng), std::exp(log_var(rng)));
        for (std::size_t g : {1u, 7u, 96u, 288u}) {
            const auto pmf = wrapped_arrival_pmf(dist, g);
            ASSERT_EQ(pmf.size(), g);
            EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-9);
            EXPECT_TRUE(std::all_of(pmf.begin(), pmf.end(), [](double p) { return p >= 0.0; }));
        }
    }
}

TEST(WrappedArrivalPmf, NearPointMassLandsInOneSlot) {
    const auto pmf = wrapped_arrival_pmf(ArrivalTimeDist::wrapped_normal(12.0, 1e-8), 96);
    EXPECT_GT(pmf[48], 1.0 - 1e-12);
}

TEST(WrappedArrivalPmf, ModeAtNineteenHours) {
    const auto pmf = wrapped_arrival_pmf(ArrivalTimeDist::wrapped_normal(19.0, 10.0), 96);
    EXPECT_EQ(std::max_element(pmf.begin(), pmf.end()) - pmf.begin(), 76);
}

TEST(WrappedArrivalPmf, MatchesLongDoubleWrapSum) {
    for (double mu : {0.1, 5.3, 19.0, 23.9}) {
        for (double var : {0.5, 10.0, 60.0}) {
            const auto pmf = wrapped_arrival_pmf(ArrivalTimeDist::wrapped_normal(mu, var), 96);
            const auto ref = oracle::wrapped_normal_pmf(mu, var, 96);
            for (std::size_t s = 0; s < 96; ++s) {
                EXPECT_NEAR(pmf[s], ref[s], 1e-12) << "mu " << mu << " var " << var << " slot " << s;
            }
        }
    }
}

TEST(WrappedArrivalPmf, WrapsAcrossMidnightLikeSampledHistogram) {
    const auto dist = ArrivalTimeDist::wrapped_normal(0.1, 10.0);
    const auto pmf = wrapped_arrival_pmf(dist, 96);
    // Nearly symmetric about 0.1 h, so the two neighbours of midnight carry similar mass.
    EXPECT_NEAR(pmf[95] / pmf[1], 1.0, 0.01);

    const std::size_t n = 1'000'000;
    std::mt19937_64 rng(11);
    std::vector<double> counts(96, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = dist.sample(rng);
        // centred bins: slot s covers [s - 1/2, s + 1/2) slot widths
        const auto s = static_cast<std::size_t>(std::floor(a / 0.25 + 0.5)) % 96;
        counts[s] += 1.0;
    }
    std::size_t within = 0;
    for (std::size_t s = 0; s < 96; ++s) {
        const double p = counts[s] / n;
        const double se = std::sqrt(pmf[s] * (1.0 - pmf[s]) / n);
        within += std::fabs(p - pmf[s]) <= 3.0 * se ? 1 : 0;
    }
    EXPECT_GE(within, 91u);
}

TEST(WrappedArrivalPmf, WrapCountCoversTenHourVariance) {
    EXPECT_EQ(ArrivalTimeDist::wrapped_normal(19.0, 10.0).wrap_count(), 2);
}

TEST(ArrivalTimeDist, RejectsNonPositiveVariance) {
    EXPECT_THROW(ArrivalTimeDist::wrapped_normal(19.0, 0.0), DomainError);
    EXPECT_THROW(ArrivalTimeDist::wrapped_normal(19.0, -1.0), DomainError);
    EXPECT_THROW(ArrivalTimeDist::wrapped_normal(NAN, 1.0), DomainError);
}

TEST(ArrivalTimeDist, LocationIsReducedModulo24) {
    EXPECT_DOUBLE_EQ(ArrivalTimeDist::wrapped_normal(43.0, 1.0).mu(), 19.0);
    EXPECT_DOUBLE_EQ(ArrivalTimeDist::wrapped_normal(-5.0, 1.0).mu(), 19.0);
    EXPECT_DOUBLE_EQ(ArrivalTimeDist::point_mass(19.0).shifted(6.0).mu(), 1.0);
}

TEST(ArrivalTimeDist, PointMassPmfIsOneHot) {
    const auto pmf = wrapped_arrival_pmf(ArrivalTimeDist::point_mass(19.0), 96);
    EXPECT_EQ(pmf[76], 1.0);
    EXPECT_EQ(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0);
}
