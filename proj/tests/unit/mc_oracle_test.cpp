// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "nanonmr/envelope.hpp"
#include "nanonmr/mc_oracle.hpp"

using namespace nanonmr;

namespace {

template <class F>
AutoCorrelation sampled(F f, double dt, std::size_t n) {
    AutoCorrelation ac;
    ac.dt = dt;
    for (std::size_t k = 0; k < n; ++k) {
        ac.lags.push_back(static_cast<double>(k) * dt);
        ac.values.push_back(f(static_cast<double>(k) * dt));
    }
    return ac;
}

}  // namespace

TEST(TailAnalysis, PureExponentialShortTime) {
    const auto ac = sampled([](double t) { return std::exp(-t / 0.4); }, 0.01, 4000);
    const auto r = analyze_correlation_tail(ac, 1.0);
    EXPECT_NEAR(r.short_time, 0.4, 1e-12);
    EXPECT_LT(r.short_max_rel_dev, 1e-12);
}

TEST(TailAnalysis, PowerLawTailSlope) {
    const auto ac = sampled([](double t) { return std::pow(1.0 + t, -1.5); }, 0.01, 4000);
    const auto r = analyze_correlation_tail(ac, 1.0);
    EXPECT_NEAR(r.slope, -1.5 * std::log(31.0 / 6.0) / std::log(30.0 / 5.0), 0.02);
    EXPECT_FALSE(r.insufficient_statistics);
    EXPECT_LT(r.slope_ci_hi - r.slope_ci_lo, 0.05);
}

TEST(TailAnalysis, HeuristicMatchesItself) {
    const auto ac = sampled([](double t) { return std::pow(1.0 + 6.0 * t, -1.5); }, 0.01, 4000);
    EXPECT_LT(analyze_correlation_tail(ac, 1.0).heuristic_max_rel_dev, 1e-12);
}

// The envelope only approaches t^{-3/2} slowly; over 5..30 T_D its mean slope is -1.23.
TEST(TailAnalysis, EnvelopeTailIsShallowerThanAsymptote) {
    const EnvelopeModel env = EnvelopeModel::power_law(1.0);
    const auto ac = sampled([&](double t) { return env(t); }, 0.01, 4000);
    const auto r = analyze_correlation_tail(ac, 1.0);
    EXPECT_NEAR(r.slope, -1.231, 0.005);
}

TEST(TailAnalysis, NoisyTailIsFlagged) {
    auto ac = sampled([](double t) { return std::pow(1.0 + t, -1.5); }, 0.01, 4000);
    for (std::size_t k = 500; k < ac.size(); ++k) ac.values[k] = (k % 2 ? 1.0 : -1.0) * 0.5;
    const auto r = analyze_correlation_tail(ac, 1.0);
    EXPECT_TRUE(r.insufficient_statistics);
    EXPECT_FALSE(r.flag_reason.empty());
}

TEST(TailAnalysis, RejectsShortRecords) {
    const auto ac = sampled([](double t) { return std::exp(-t); }, 0.01, 1000);
    EXPECT_THROW((void)analyze_correlation_tail(ac, 1.0), DataError);
    EXPECT_THROW((void)analyze_correlation_tail(ac, 0.0), DomainError);
}

TEST(MonteCarlo, ScaleInvariantUnderRescaling) {
    DiffusionScene scene;
    scene.n_particles = 64;
    scene.seed = 5;
    const auto a = mc_dipole_correlation(scene, 4000, {.max_lag = 800});
    const auto b = mc_dipole_correlation(scene.rescaled(3.0), 4000, {.max_lag = 800});
    ASSERT_EQ(a.size(), b.size());
    EXPECT_DOUBLE_EQ(a.values[0], 1.0);
    for (std::size_t k = 0; k < a.size(); k += 50) EXPECT_NEAR(a.values[k], b.values[k], 1e-9) << k;
}

TEST(MonteCarlo, IndependentOfThreadCount) {
    DiffusionScene scene;
    scene.n_particles = 32;
    const auto a = mc_dipole_correlation(scene, 2000, {.max_lag = 400});
    set_thread_count(1);
    const auto b = mc_dipole_correlation(scene, 2000, {.max_lag = 400});
    set_thread_count(0);
    EXPECT_EQ(a.values, b.values);
}

TEST(MonteCarlo, DecaysOnDiffusionTime) {
    DiffusionScene scene;
    scene.n_particles = 400;
    const auto ac = mc_dipole_correlation(scene, 20000, {.max_lag = 4000});
    EXPECT_GT(ac.values[10], 0.55);
    EXPECT_LT(ac.values[10], 0.85);
    EXPECT_LT(ac.values[100], 0.6);
    EXPECT_LT(ac.values[3000], 0.1);
}

TEST(MonteCarlo, RejectsShortRuns) {
    DiffusionScene scene;
    scene.n_particles = 4;
    EXPECT_THROW((void)mc_dipole_correlation(scene, 100, {.max_lag = 60}), ConfigError);
    scene.depth_d = 0.0;
    EXPECT_THROW((void)mc_dipole_correlation(scene, 100), ConfigError);
}
