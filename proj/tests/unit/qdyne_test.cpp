// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/qdyne.hpp"

using namespace nanonmr;

namespace {

QdyneGeometry bright_geometry() {
    QdyneGeometry g;
    g.T_D = 400e-6;
    g.dt = g.T_D / 4.0;
    g.delta = 2.0 * std::numbers::pi * 900.0;
    g.phi_rms = 1.0;
    g.B_rms = 1e-7;
    g.eta0 = 0.9;
    g.eta1 = 0.1;
    g.samples_per_slice = 1u << 20;
    g.group = 1;
    g.max_lag = 40;
    return g;
}

}  // namespace

TEST(QdyneGeometry, PresetOneValues) {
    const auto g = QdyneGeometry::from_preset(qdyne_preset("qdyne-1"));
    EXPECT_NEAR(g.contrast(), 0.005, 1e-15);
    EXPECT_NEAR(g.mean_rate(), 0.035, 1e-15);
    EXPECT_NEAR(g.count_variance(), 0.035025, 1e-15);
    EXPECT_EQ(g.max_lag, 302u);
    const double mu1 = g.expected_covariance(g.dt, g.envelope(EnvelopeKind::PowerLaw));
    EXPECT_NEAR(mu1, 2.80e-6, 0.02e-6);
    EXPECT_NEAR(g.lag_sigma(1), 1.84e-6, 0.01e-6);
}

TEST(QdyneGeometry, ValidateRejectsBadValues) {
    auto g = bright_geometry();
    g.eta1 = 0.95;
    EXPECT_THROW(g.validate(), ConfigError);
    g = bright_geometry();
    g.max_lag = g.samples_per_slice;
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(QdyneGeometry, SmallPhaseCovarianceIsLinear) {
    auto g = bright_geometry();
    g.phi_rms = 1e-3;
    const auto env = g.envelope(EnvelopeKind::Exponential);
    const double t = 3.0 * g.dt;
    const double rho = std::cos(g.delta * t) * env(t);
    EXPECT_NEAR(g.expected_covariance(t, env) / (g.contrast() * g.contrast() * 1e-6 * rho), 1.0, 1e-5);
}

TEST(MatchedSnr, MeanAndSpreadMatchTargets) {
    auto g = bright_geometry();
    g.samples_per_slice = 100000;
    g.eta0 = 0.04;
    g.eta1 = 0.03;
    const std::size_t n = 400;
    const auto groups = matched_snr_groups(g, EnvelopeKind::PowerLaw, n, 11);
    ASSERT_EQ(groups.size(), n);
    const auto env = g.envelope(EnvelopeKind::PowerLaw);
    for (std::size_t k : {1u, 10u, 40u}) {
        double sum = 0.0, sq = 0.0;
        for (const auto& ac : groups) {
            sum += ac.values[k - 1];
            sq += ac.values[k - 1] * ac.values[k - 1];
        }
        const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
        EXPECT_NEAR(mean, g.expected_covariance(k * g.dt, env), 5.0 * g.lag_sigma(k) / std::sqrt(double(n)));
        EXPECT_NEAR(sd / g.lag_sigma(k), 1.0, 0.15);
    }
    EXPECT_EQ(groups[0].counts[0], g.group * (g.samples_per_slice - 1));
    EXPECT_DOUBLE_EQ(groups[0].lags[0], g.dt);
}

TEST(MatchedSnr, IndependentOfThreadCount) {
    const auto g = bright_geometry();
    const auto a = matched_snr_groups(g, EnvelopeKind::Exponential, 8, 5);
    set_thread_count(1);
    const auto b = matched_snr_groups(g, EnvelopeKind::Exponential, 8, 5);
    set_thread_count(0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

// The photon chain's count autocovariance agrees with the closed-form expectation.
TEST(PhotonChain, CountCovarianceMatchesExpectation) {
    for (auto kind : {EnvelopeKind::Exponential, EnvelopeKind::PowerLaw}) {
        const auto g = bright_geometry();
        const auto counts = simulate_qdyne_counts(g, kind, 1, 21);
        const auto ac = autocorrelate(counts, g.max_lag, g.dt);
        const auto env = g.envelope(kind);
        for (std::size_t k = 1; k <= g.max_lag; k += 3) {
            const double expected = g.expected_covariance(k * g.dt, env);
            const double tol = std::max(6.0 * g.count_variance() / std::sqrt(double(g.samples_per_slice)), 0.05 * std::abs(expected));
            EXPECT_NEAR(ac.values[k], expected, tol) << to_string(kind) << " lag " << k;
        }
    }
}

TEST(PhotonChain, Deterministic) {
    auto g = bright_geometry();
    g.samples_per_slice = 4096;
    const auto a = simulate_qdyne_counts(g, EnvelopeKind::PowerLaw, 2, 9);
    const auto b = simulate_qdyne_counts(g, EnvelopeKind::PowerLaw, 2, 9);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, simulate_qdyne_counts(g, EnvelopeKind::PowerLaw, 2, 10));
    EXPECT_THROW((void)simulate_qdyne_counts(g, EnvelopeKind::Mixed, 1, 9), ConfigError);
}
