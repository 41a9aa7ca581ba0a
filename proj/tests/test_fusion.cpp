#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fusionsim/delay.hpp"
#include "fusionsim/fusion.hpp"
#include "fusionsim/process.hpp"
#include "oracles.hpp"

using namespace fusionsim;
using namespace fusionsim::fusion;

TEST(FusionWeights, LimitsAtRhoZeroAndOne) {
    const auto w1 = fusion_weights(10.0, 1.0, 4.0, 2.0);
    EXPECT_DOUBLE_EQ(w1.g, 0.0);
    EXPECT_DOUBLE_EQ(w1.q, 1.0);
    const auto w0 = fusion_weights(10.0, 0.0, 4.0, 2.0);
    EXPECT_DOUBLE_EQ(w0.g, 1.0);
    EXPECT_DOUBLE_EQ(w0.q, 0.0);
}

TEST(FusionWeights, MatchesGaussianConditioning) {
    const auto w = fusion_weights(10.0, 0.5, 4.0, 2.0);
    EXPECT_NEAR(w.g, 12.0 / 13.0, 1e-12);
    EXPECT_NEAR(w.q, 2.0 / 13.0, 1e-12);
    // Weights are the oracle's response to unit observations.
    EXPECT_NEAR(w.g, gaussian_conditioning_oracle(10.0, 0.5, 6.0, 8.0, 1.0, 0.0, 1), 1e-12);
    EXPECT_NEAR(w.q, gaussian_conditioning_oracle(10.0, 0.5, 6.0, 8.0, 0.0, 1.0, 1), 1e-12);
}

TEST(FusionWeights, BranchAndDomainErrors) {
    EXPECT_THROW(fusion_weights(10.0, 0.5, 2.0, 2.0), ContractError);
    EXPECT_THROW(fusion_weights(10.0, 0.5, 2.0, 4.0), ContractError);
    EXPECT_THROW(fusion_weights(3.0, 0.5, 4.0, 2.0), InputDomainError);
}

TEST(MmseEstimate, IndependentSourcesKeepOwnSamples) {
    const auto e = mmse_estimate({10.0, 6.0, 1.5, 8.0, -2.0, 0.0});
    EXPECT_EQ(e[0], 1.5);
    EXPECT_EQ(e[1], -2.0);
}

TEST(MmseEstimate, FullCorrelationCopiesFresherSample) {
    const auto e = mmse_estimate({10.0, 8.0, 3.25, 6.0, 9.0, 1.0});
    EXPECT_DOUBLE_EQ(e[0], 3.25);
    EXPECT_DOUBLE_EQ(e[1], 3.25);
}

TEST(MmseEstimate, FusesStaleSourceWithFresherOne) {
    const auto e = mmse_estimate({10.0, 6.0, 1.0, 8.0, 2.0, 0.5});
    EXPECT_NEAR(e[0], 16.0 / 13.0, 1e-12);
    EXPECT_EQ(e[1], 2.0);
    EXPECT_NEAR(e[0], gaussian_conditioning_oracle(10.0, 0.5, 6.0, 8.0, 1.0, 2.0, 1), 1e-12);
    EXPECT_NEAR(e[1], gaussian_conditioning_oracle(10.0, 0.5, 6.0, 8.0, 1.0, 2.0, 2), 1e-12);
}

TEST(MmseEstimate, TiesUseOwnSamples) {
    const auto e = mmse_estimate({5.0, 3.0, 0.7, 3.0, -0.2, 0.8});
    EXPECT_EQ(e[0], 0.7);
    EXPECT_EQ(e[1], -0.2);
}

TEST(GaussianConditioningOracle, TrivialCases) {
    EXPECT_DOUBLE_EQ(gaussian_conditioning_oracle(9.0, 0.0, 4.0, 4.0, 1.25, -3.0, 1), 1.25);
    EXPECT_DOUBLE_EQ(gaussian_conditioning_oracle(9.0, 0.0, 4.0, 4.0, 1.25, -3.0, 2), -3.0);
    EXPECT_EQ(gaussian_conditioning_oracle(9.0, 0.7, 2.0, 5.0, 0.0, 0.0, 1), 0.0);
    // Zero-time observation is dropped.
    EXPECT_NEAR(gaussian_conditioning_oracle(9.0, 0.7, 0.0, 5.0, 0.0, 2.0, 1), 0.7 * 2.0, 1e-12);
    EXPECT_THROW(gaussian_conditioning_oracle(9.0, 0.7, 0.0, 5.0, 1.0, 2.0, 1), SingularityError);
    // Perfect correlation at equal times is rank one.
    EXPECT_NEAR(gaussian_conditioning_oracle(9.0, 1.0, 4.0, 4.0, 2.0, 2.0, 2), 2.0, 1e-12);
    EXPECT_THROW(gaussian_conditioning_oracle(9.0, 1.0, 4.0, 4.0, 2.0, 3.0, 2), SingularityError);
}

TEST(GaussianConditioningOracle, AgreesWithEstimatorOnRandomStates) {
    RandomStream rng(2024, 0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 100.0 * rng.uniform();
        const double rho = rng.uniform();
        const double s1 = t * rng.uniform(), s2 = t * rng.uniform();
        const double v1 = 10.0 * (rng.uniform() - 0.5), v2 = 10.0 * (rng.uniform() - 0.5);
        const auto e = mmse_estimate({t, s1, v1, s2, v2, rho});
        for (int m = 1; m <= 2; ++m) {
            const double o = gaussian_conditioning_oracle(t, rho, s1, s2, v1, v2, m);
            const double scale = std::max({std::abs(o), std::abs(v1), std::abs(v2)});
            worst = std::max(worst, std::abs(e[m - 1] - o) / scale);
        }
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(ExpectedMse, IndependentSourcesSumAges) { EXPECT_DOUBLE_EQ(expected_mse(10.0, 0.0, 3.0, 5.0), 8.0); }

TEST(ExpectedMse, EqualAgesAtFullCorrelation) {
    EXPECT_DOUBLE_EQ(expected_mse(7.0, 1.0, 2.5, 2.5), 5.0);
    EXPECT_DOUBLE_EQ(expected_mse(2.5, 1.0, 2.5, 2.5), 5.0);
}

TEST(ExpectedMse, ClosedFormValue) {
    EXPECT_NEAR(expected_mse(10.0, 0.9, 5.0, 3.0), 8.0 - 3.24 / 2.95, 1e-12);
}

TEST(ExpectedMse, MonteCarloAtFixedSampleTimes) {
    // t = 10, ages (5, 3): samples at 5 and 7.
    const std::size_t paths = 100000;
    const std::vector<double> grid{0.0, 5.0, 7.0, 10.0};
    RandomStream rng(31, 0);
    process::ProcessParams p(0.9);
    oracles::Running acc;
    for (std::size_t k = 0; k < paths; ++k) {
        const auto path = process::simulate_path(p, grid, rng);
        const auto est = mmse_estimate({10.0, 5.0, path.values[1][0], 7.0, path.values[2][1], 0.9});
        const double e1 = path.values[3][0] - est[0], e2 = path.values[3][1] - est[1];
        acc.add(e1 * e1 + e2 * e2);
    }
    EXPECT_NEAR(acc.mean, 8.0 - 3.24 / 2.95, 3.0 * acc.se());
}

TEST(ExpectedMse, BoundedBySumOfAges) {
    RandomStream rng(3, 0);
    for (int k = 0; k < 2000; ++k) {
        const double t = 50.0 * rng.uniform();
        const double d1 = t * rng.uniform(), d2 = t * rng.uniform();
        const double rho = rng.uniform();
        EXPECT_LE(expected_mse(t, rho, d1, d2), d1 + d2 + 1e-12);
        EXPECT_LT(expected_mse(t, rho, d1, d2), d1 + d2) << "strict when rho > 0 and ages differ";
        EXPECT_DOUBLE_EQ(expected_mse(t, 0.0, d1, d2), d1 + d2);
        EXPECT_DOUBLE_EQ(expected_mse(t, rho, d1, d1), 2.0 * d1);
    }
}

TEST(ExpectedMse, FullCorrelationIsTwiceTheSmallerAge) {
    for (double t : {3.0, 10.0, 40.0})
        for (double d1 = 0.0; d1 <= t; d1 += t / 7.0)
            for (double d2 = 0.0; d2 <= t; d2 += t / 5.0)
                if (d1 != d2) {
                    EXPECT_NEAR(expected_mse(t, 1.0, d1, d2), 2.0 * std::min(d1, d2), 1e-9 * t);
                }
}

TEST(ExpectedMse, DomainChecks) {
    EXPECT_THROW(expected_mse(1.0, 0.5, 2.0, 0.5), InputDomainError);
    EXPECT_THROW(expected_mse(1.0, 0.5, -0.1, 0.5), InputDomainError);
}

TEST(QRho, Values) {
    EXPECT_EQ(q_rho(4.0, 4.0, 0.7), 0.0);
    EXPECT_EQ(q_rho(0.0, 0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(q_rho(10.0, 6.0, 0.0), 4.0);
    EXPECT_NEAR(q_rho(10.0, 6.0, 0.9), 4.0 * (1.0 - 3.24 / 5.14), 1e-12);
    EXPECT_NEAR(q_rho(10.0, 6.0, 0.9), 1.478599, 1e-6);
    EXPECT_DOUBLE_EQ(q_rho(6.0, 10.0, 0.9), q_rho(10.0, 6.0, 0.9));
    EXPECT_THROW(q_rho(-1.0, 2.0, 0.5), InputDomainError);
}

TEST(QRho, IsTheSubtractedTermLimit) {
    // t (age sum - expected_mse) evaluated with ages t - s: q = gamma - R.
    const double s1 = 10.0, s2 = 6.0, rho = 0.9;
    for (double t : {10.0, 12.0, 100.0}) {
        const double r = (t - s1) + (t - s2) - expected_mse(t, rho, t - s1, t - s2);
        EXPECT_NEAR(q_rho(s1, s2, rho), std::abs(s1 - s2) - r, 1e-12);
    }
}

TEST(IntervalCost, HandExpansions) {
    const DelayMoments mom(1.0, 20.0);
    EXPECT_DOUBLE_EQ(interval_cost(3.0, 3.0, 0.0, 0.0, mom, 0.0), 20.0);
    EXPECT_DOUBLE_EQ(interval_cost(10.0, 6.0, 0.0, 1.0, mom, 0.0), 31.0);
    EXPECT_THROW(interval_cost(10.0, 6.0, -1.0, 1.0, mom, 0.0), InputDomainError);
}

TEST(IntervalCost, MatchesMonteCarloIntegral) {
    RandomStream pick(8, 0);
    for (int k = 0; k < 10; ++k) {
        const double p = 0.3 + 0.69 * pick.uniform();
        const auto delay = DelayDistribution::binary(p, 1.0 + 19.0 * pick.uniform());
        const double s1 = 30.0 * pick.uniform(), s2 = 30.0 * pick.uniform();
        const double y = 5.0 * pick.uniform(), z = 4.0 * pick.uniform(), rho = pick.uniform();
        RandomStream rng(8, 1 + static_cast<std::uint64_t>(k));
        const auto mc = oracles::interval_integral_mc(s1, s2, y, z, delay, rho, 20000, rng);
        EXPECT_NEAR(interval_cost(s1, s2, y, z, delay.moments(), rho), mc.mean, 3.0 * mc.se);
    }
}

TEST(MmseEstimate, UnbiasedAtFixedEpochs) {
    const std::size_t paths = 100000;
    const std::vector<double> grid{0.0, 2.0, 3.5, 6.0};
    RandomStream rng(44, 0);
    process::ProcessParams p(0.8);
    oracles::Running e1, e2;
    for (std::size_t k = 0; k < paths; ++k) {
        const auto path = process::simulate_path(p, grid, rng);
        const auto est = mmse_estimate({6.0, 2.0, path.values[1][0], 3.5, path.values[2][1], 0.8});
        e1.add(path.values[3][0] - est[0]);
        e2.add(path.values[3][1] - est[1]);
    }
    EXPECT_LE(std::abs(e1.mean), 4.0 * e1.se());
    EXPECT_LE(std::abs(e2.mean), 4.0 * e2.se());
}

TEST(DelayMoments, Validation) {
    EXPECT_THROW(DelayMoments(-1.0, 2.0), InputDomainError);
    EXPECT_THROW(DelayMoments(2.0, 3.0), InputDomainError);
    EXPECT_NO_THROW(DelayMoments(2.0, 4.0));
}
