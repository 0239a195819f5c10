// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>

#include "nanonmr/pipeline.hpp"

using namespace nanonmr;

namespace {

AutoCorrelation make_group(std::vector<double> values, std::size_t count) {
    AutoCorrelation ac;
    ac.dt = 1e-3;
    for (std::size_t k = 0; k < values.size(); ++k) {
        ac.lags.push_back(static_cast<double>(k + 1) * ac.dt);
        ac.counts.push_back(count);
    }
    ac.values = std::move(values);
    return ac;
}

}  // namespace

TEST(CombineGroups, CountWeightedMean) {
    const auto c = combine_groups({make_group({1.0, 2.0}, 1), make_group({4.0, 5.0}, 3)});
    EXPECT_DOUBLE_EQ(c.values[0], 3.25);
    EXPECT_DOUBLE_EQ(c.values[1], 4.25);
    EXPECT_EQ(c.counts[0], 4u);
    EXPECT_EQ(c.source_meta, "combined;groups=2");
}

TEST(CombineGroups, RejectsMismatch) {
    EXPECT_THROW((void)combine_groups({}), DataError);
    auto b = make_group({1.0, 2.0}, 1);
    b.lags[1] *= 2.0;
    EXPECT_THROW((void)combine_groups({make_group({1.0, 2.0}, 1), b}), DataError);
}

TEST(GroupsFromCounts, DropsZeroLagAndShrinksGroup) {
    std::vector<double> counts(6 * 100);
    std::iota(counts.begin(), counts.end(), 0.0);
    for (auto& v : counts) v = std::fmod(v * 0.618, 1.0);
    ScopedWarningCapture capture;
    const auto groups = groups_from_counts(counts, 100, 4, 10, 0.5);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(capture.messages().size(), 1u);
    EXPECT_NE(capture.messages()[0].find("reduced from 4 to 3"), std::string::npos);
    ASSERT_EQ(groups[0].size(), 10u);
    EXPECT_DOUBLE_EQ(groups[0].lags[0], 0.5);
    EXPECT_EQ(groups[0].counts[0], 3u * 99u);
    EXPECT_THROW((void)groups_from_counts(std::span<const double>(counts).first(150), 100, 1, 10, 0.5), DataError);
}

TEST(ScaledGrouping, FullScaleAndDeskScale) {
    const auto& p = qdyne_preset("qdyne-1");
    EXPECT_EQ(scaled_grouping(p, 1.0), std::make_pair(std::size_t{18}, std::size_t{20}));
    ScopedWarningCapture capture;
    EXPECT_EQ(scaled_grouping(p, 0.05), std::make_pair(std::size_t{2}, std::size_t{9}));
    EXPECT_EQ(capture.messages().size(), 1u);
    EXPECT_THROW((void)scaled_grouping(p, 0.001), ConfigError);
    EXPECT_THROW((void)scaled_grouping(p, 0.0), ConfigError);
}

TEST(SettingsFor, UsesPresetWindowAndReference) {
    const auto s = settings_for(qdyne_preset("qdyne-3"), 4);
    EXPECT_NEAR(s.reference_hz, 12000.0, 1e-6);
    EXPECT_NEAR(s.f_lo_hz, 11200.0, 1e-6);
    EXPECT_TRUE(s.fix_phase);
    EXPECT_EQ(s.seed, 4u);
}

TEST(AnalyzeGroups, RecoversFrequencyFromCleanGroups) {
    const auto& p = qdyne_preset("qdyne-1");
    auto s = settings_for(p, 3);
    s.n_restarts = 20;
    const auto r = run_matched_snr(p, EnvelopeKind::PowerLaw, 0.25, 3, s, 0.02);
    ASSERT_TRUE(r.powerlaw.global_stats && r.powerlaw.local_stats);
    EXPECT_EQ(r.powerlaw.global.size(), 4u);
    EXPECT_NEAR(r.powerlaw.local_stats->mean, 900.0, 20.0);
    EXPECT_LT(r.powerlaw.local_stats->rmse, 30.0);
    EXPECT_NEAR(r.flat_limit_hz, 472.58, 0.01);
    ASSERT_TRUE(r.ratio_local);
}

TEST(AnalyzeGroups, Deterministic) {
    const auto& p = qdyne_preset("qdyne-1");
    auto s = settings_for(p, 3);
    s.n_restarts = 5;
    const auto a = run_matched_snr(p, EnvelopeKind::Exponential, 0.25, 8, s);
    const auto b = run_matched_snr(p, EnvelopeKind::Exponential, 0.25, 8, s);
    ASSERT_EQ(a.powerlaw.global.size(), b.powerlaw.global.size());
    for (std::size_t i = 0; i < a.powerlaw.global.size(); ++i)
        EXPECT_EQ(a.powerlaw.global[i].params.delta, b.powerlaw.global[i].params.delta);
    EXPECT_EQ(a.ratio_global, b.ratio_global);
}

TEST(AnalyzeGroups, RejectsTooFewGroups) {
    EXPECT_THROW((void)analyze_groups({make_group({1.0, 2.0}, 1)}, AnalysisSettings{}), DataError);
}
