// SPDX-License-Identifier: Apache-2.0
//
// Frequency-estimation pipeline over groups of slice-averaged correlations, and the
// ensemble runners built on it.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/diagnostics.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/estimation.hpp"
#include "nanonmr/fitting.hpp"
#include "nanonmr/periodogram.hpp"
#include "nanonmr/presets.hpp"
#include "nanonmr/qdyne.hpp"
#include "nanonmr/random.hpp"

namespace nanonmr {

struct AnalysisSettings {
    double f_lo_hz = 200.0;
    double f_hi_hz = 1800.0;
    double reference_hz = 0.0;       ///< frequency the rmse is measured against
    std::size_t n_restarts = 500;
    bool fix_phase = true;
    std::optional<double> fixed_a1;
    bool detrend = false;
    bool run_global = true;
    bool run_local = true;
    std::uint64_t seed = 1;
    std::size_t pad_factor = 8;
};

struct ModelEstimates {
    EnvelopeKind kind = EnvelopeKind::PowerLaw;
    std::vector<FitResult> global;
    std::vector<FitResult> local;
    std::optional<HistogramStats> global_stats;  ///< estimators in Hz
    std::optional<HistogramStats> local_stats;
};

struct GroupAnalysis {
    AutoCorrelation total;                  ///< count-weighted mean of all groups
    FftSpectrum total_spectrum;
    std::optional<DetrendResult> detrend;
    ModelEstimates powerlaw;
    ModelEstimates exponential;
    std::optional<double> ratio_global;     ///< rmse_pl / rmse_exp
    std::optional<double> ratio_local;
    double flat_limit_hz = 0.0;
};

/// Count-weighted average of correlations on identical lag grids.
inline AutoCorrelation combine_groups(const std::vector<AutoCorrelation>& groups) {
    if (groups.empty()) throw DataError("combine_groups: no groups");
    AutoCorrelation out = groups.front();
    std::vector<double> weight(out.size(), 0.0);
    std::fill(out.values.begin(), out.values.end(), 0.0);
    std::fill(out.counts.begin(), out.counts.end(), 0);
    for (const auto& g : groups) {
        if (g.lags != out.lags) throw DataError("combine_groups: lag grids differ");
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double w = g.counts.empty() ? 1.0 : static_cast<double>(g.counts[k]);
            out.values[k] += w * g.values[k];
            weight[k] += w;
            if (!g.counts.empty()) out.counts[k] += g.counts[k];
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = weight[k] > 0.0 ? out.values[k] / weight[k] : 0.0;
    out.source_meta = "combined;groups=" + std::to_string(groups.size());
    return out;
}

namespace detail {

inline std::vector<double> delta_hz(const std::vector<FitResult>& fits) {
    std::vector<double> out;
    out.reserve(fits.size());
    for (const auto& f : fits) out.push_back(f.params.delta / (2.0 * std::numbers::pi));
    return out;
}

}  // namespace detail

/// Fits every group under both envelope models and summarises the frequency estimators.
/// Global fits draw their starts from substream ("group", g) of the settings seed; local
/// fits are seeded from the spectrum, amplitude and decay time of the combined record.
inline GroupAnalysis analyze_groups(std::vector<AutoCorrelation> groups, const AnalysisSettings& s) {
    if (groups.size() < 2) throw DataError("analyze_groups: need at least two groups");
    if (!(s.f_hi_hz > s.f_lo_hz)) throw ConfigError("analyze_groups: empty frequency window");
    GroupAnalysis out;
    out.total = combine_groups(groups);
    if (s.detrend) {
        out.detrend = detrend_exponential(out.total, EnvelopeKind::PowerLaw, s.pad_factor);
        if (out.detrend->applied) {
            out.total = out.detrend->corrected;
            for (auto& g : groups)
                for (std::size_t k = 0; k < g.size(); ++k) g.values[k] -= out.detrend->removed[k];
        }
    }
    out.total_spectrum = fft_spectrum(out.total, s.pad_factor, s.f_lo_hz, s.f_hi_hz);
    out.flat_limit_hz = flat_histogram_rmse(s.f_lo_hz, s.f_hi_hz, s.reference_hz);

    FixedMask fixed{};
    fixed[kPhi] = s.fix_phase;
    fixed[kA1] = s.fixed_a1.has_value();
    SignalModelParams fixed_values;
    fixed_values.phi = 0.0;
    fixed_values.a1 = s.fixed_a1.value_or(0.0);

    const SeedTree tree(s.seed);
    auto run_model = [&](EnvelopeKind kind) {
        ModelEstimates m;
        m.kind = kind;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto bounds = default_bounds(groups[g], s.f_lo_hz, s.f_hi_hz);
            SignalModelParams fv = fixed_values;
            fv.envelope = EnvelopeModel::make(kind, 0.5 * (bounds.lo[kTD] + bounds.hi[kTD]));
            if (s.run_global)
                m.global.push_back(global_fit(groups[g], kind, bounds, fixed, fv, s.n_restarts, tree.child("group", g).root()));
            if (s.run_local && out.total_spectrum.has_peak())
                m.local.push_back(local_fit(groups[g], kind, out.total_spectrum, bounds, fixed, fv, {}, &out.total));
        }
        const double two_pi = 2.0 * std::numbers::pi;
        const auto bounds0 = default_bounds(groups.front(), s.f_lo_hz, s.f_hi_hz);
        const double lo = bounds0.lo[kDelta] / two_pi, hi = bounds0.hi[kDelta] / two_pi;
        if (!m.global.empty()) m.global_stats = histogram_stats(detail::delta_hz(m.global), s.reference_hz, lo, hi);
        if (!m.local.empty()) m.local_stats = histogram_stats(detail::delta_hz(m.local), s.reference_hz, lo, hi);
        return m;
    };
    out.powerlaw = run_model(EnvelopeKind::PowerLaw);
    out.exponential = run_model(EnvelopeKind::Exponential);
    if (out.powerlaw.global_stats && out.exponential.global_stats && out.exponential.global_stats->rmse > 0.0)
        out.ratio_global = out.powerlaw.global_stats->rmse / out.exponential.global_stats->rmse;
    if (out.powerlaw.local_stats && out.exponential.local_stats && out.exponential.local_stats->rmse > 0.0)
        out.ratio_local = out.powerlaw.local_stats->rmse / out.exponential.local_stats->rmse;
    return out;
}

/// Analysis settings matching a preset: its search window, the preset frequency as
/// reference, and phi fixed at zero.
inline AnalysisSettings settings_for(const QdynePreset& p, std::uint64_t seed) {
    AnalysisSettings s;
    std::tie(s.f_lo_hz, s.f_hi_hz) = p.search_hz();
    s.reference_hz = p.delta_hz();
    s.seed = seed;
    return s;
}

/// Number of slice groups at a desk scale. When fewer than two full groups remain,
/// the group size shrinks so that at least two groups exist (with a warning).
inline std::pair<std::size_t, std::size_t> scaled_grouping(const QdynePreset& p, double scale) {
    if (!(scale > 0.0)) throw ConfigError("scale must be > 0");
    const std::size_t slices = p.n_slices(scale);
    if (slices < 2) throw ConfigError("scale leaves fewer than two slices");
    std::size_t group = p.group;
    if (slices / group < 2) {
        group = slices / 2;
        warn("group size reduced from " + std::to_string(p.group) + " to " + std::to_string(group) +
             " slices at scale " + std::to_string(scale));
    }
    return {slices / group, group};
}

/// Slice-group correlations (lags 1..max_lag) from a photon-count record. The group
/// size shrinks when the record holds fewer than two full groups.
inline std::vector<AutoCorrelation> groups_from_counts(std::span<const double> counts, std::size_t samples_per_slice,
                                                       std::size_t group, std::size_t max_lag, double dt) {
    if (samples_per_slice == 0) throw ConfigError("groups_from_counts: samples_per_slice must be > 0");
    const std::size_t slices = counts.size() / samples_per_slice;
    if (slices < 2) throw DataError("groups_from_counts: record shorter than two slices");
    if (slices / group < 2) {
        const std::size_t reduced = slices / 2;
        warn("group size reduced from " + std::to_string(group) + " to " + std::to_string(reduced) + " slices");
        group = reduced;
    }
    auto groups = slice_average(counts, samples_per_slice, group, max_lag, dt);
    for (auto& g : groups) {
        auto meta = g.source_meta;
        g = g.window(1, g.size());
        g.source_meta = meta;
    }
    return groups;
}

/// One matched-SNR ensemble run for a preset: synthesises groups with `data_kind`
/// noise and analyses them under both models.
inline GroupAnalysis run_matched_snr(const QdynePreset& p, EnvelopeKind data_kind, double scale, std::uint64_t seed,
                                     AnalysisSettings settings, double noise_scale = 1.0) {
    const auto [n_groups, group] = scaled_grouping(p, scale);
    auto geom = QdyneGeometry::from_preset(p);
    geom.group = group;
    geom.noise_scale = noise_scale;
    const SeedTree tree(seed);
    auto groups = matched_snr_groups(geom, data_kind, n_groups, tree.child("data").root());
    settings.seed = tree.child("fit").root();
    return analyze_groups(std::move(groups), settings);
}

}  // namespace nanonmr
