// SPDX-License-Identifier: Apache-2.0
//
// Synthetic Qdyne data. Two levels are provided:
//   * the photon chain (noise quadratures -> phase -> readout -> photon counts), and
//   * slice-group correlations drawn directly from their mean and shot-noise spread,
//     which is what ensemble studies use because a 15-minute slice holds ~10^7 readouts.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/measurement.hpp"
#include "nanonmr/noise.hpp"
#include "nanonmr/parallel.hpp"
#include "nanonmr/presets.hpp"
#include "nanonmr/random.hpp"

namespace nanonmr {

/// Everything the synthesis needs about one Qdyne configuration, in SI units.
struct QdyneGeometry {
    double dt = 0.0;        ///< sampling period T_Qd
    double T_D = 0.0;
    double delta = 0.0;     ///< rad/s
    double phi_rms = 0.0;   ///< rms phase per readout
    double B_rms = 1.0;
    double eta0 = 0.04, eta1 = 0.03;
    std::size_t samples_per_slice = 0;
    std::size_t group = 20;
    std::size_t max_lag = 0;
    double noise_scale = 1.0;  ///< multiplies the shot-noise spread of synthesised correlations

    static QdyneGeometry from_preset(const QdynePreset& p) {
        QdyneGeometry g;
        const auto sensor = p.sensor();
        g.dt = p.sampling_period();
        g.T_D = p.diffusion_time();
        g.delta = p.delta();
        g.phi_rms = p.phi_rms_value();
        g.B_rms = sensor.B_rms;
        g.eta0 = sensor.eta0;
        g.eta1 = sensor.eta1;
        g.samples_per_slice = p.samples_per_slice();
        g.group = p.group;
        g.max_lag = p.fit_max_lag();
        return g;
    }

    void validate() const {
        if (!(dt > 0.0 && T_D > 0.0 && phi_rms > 0.0 && B_rms > 0.0)) throw ConfigError("QdyneGeometry: non-positive scale");
        if (!(eta1 > 0.0 && eta0 > eta1)) throw ConfigError("QdyneGeometry: need 0 < eta1 < eta0");
        if (!(noise_scale >= 0.0)) throw ConfigError("QdyneGeometry: noise_scale must be >= 0");
        if (group == 0) throw ConfigError("QdyneGeometry: group must be >= 1");
        if (!(max_lag >= 1 && 2 * max_lag < samples_per_slice))
            throw ConfigError("QdyneGeometry: need 1 <= max_lag < samples_per_slice / 2");
    }

    [[nodiscard]] double contrast() const noexcept { return 0.5 * (eta0 - eta1); }
    [[nodiscard]] double mean_rate() const noexcept { return 0.5 * (eta0 + eta1); }

    /// Single-readout count variance: Poisson plus the spread of the bright/dark mixture.
    [[nodiscard]] double count_variance() const noexcept { return mean_rate() + contrast() * contrast(); }

    [[nodiscard]] EnvelopeModel envelope(EnvelopeKind kind) const {
        if (kind == EnvelopeKind::Mixed) return EnvelopeModel::mixed(T_D, 50.0 * T_D);
        return EnvelopeModel::make(kind, T_D);
    }

    /// Expected count autocovariance at lag time t: with Phi jointly Gaussian of variance
    /// s^2 and lag correlation rho = cos(delta t) C(t), E[sin Phi sin Phi'] = e^{-s^2} sinh(s^2 rho).
    [[nodiscard]] double expected_covariance(double t, const EnvelopeModel& env) const {
        const double s2 = phi_rms * phi_rms;
        const double rho = std::cos(delta * t) * env(t);
        return contrast() * contrast() * std::exp(-s2) * std::sinh(s2 * rho);
    }

    /// Standard error of the group-averaged autocovariance at lag k.
    [[nodiscard]] double lag_sigma(std::size_t k) const {
        const double pairs = static_cast<double>(group) * static_cast<double>(samples_per_slice - k);
        return noise_scale * count_variance() / std::sqrt(pairs);
    }
};

/// Group-averaged correlations (lags 1..max_lag) drawn as mean plus independent
/// Gaussian shot noise per lag. Group g uses substream ("qdyne-correlation", g), so
/// results do not depend on the number of workers.
inline std::vector<AutoCorrelation> matched_snr_groups(const QdyneGeometry& geom, EnvelopeKind kind,
                                                       std::size_t n_groups, std::uint64_t seed) {
    geom.validate();
    const auto env = geom.envelope(kind);
    std::vector<double> mean(geom.max_lag), sigma(geom.max_lag);
    for (std::size_t k = 1; k <= geom.max_lag; ++k) {
        mean[k - 1] = geom.expected_covariance(static_cast<double>(k) * geom.dt, env);
        sigma[k - 1] = geom.lag_sigma(k);
    }
    const SeedTree tree(seed);
    std::vector<AutoCorrelation> groups(n_groups);
    parallel_for(n_groups, [&](std::size_t g) {
        RandomStream rng = tree.stream("qdyne-correlation", g);
        AutoCorrelation& ac = groups[g];
        ac.dt = geom.dt;
        ac.lags.resize(geom.max_lag);
        ac.values.resize(geom.max_lag);
        ac.counts.resize(geom.max_lag);
        for (std::size_t k = 1; k <= geom.max_lag; ++k) {
            ac.lags[k - 1] = static_cast<double>(k) * geom.dt;
            ac.values[k - 1] = mean[k - 1] + sigma[k - 1] * rng.normal();
            ac.counts[k - 1] = geom.group * (geom.samples_per_slice - k);
        }
        ac.source_meta = "matched-snr;model=" + std::string(to_string(kind)) + ";group=" + std::to_string(geom.group) +
                         ";group_index=" + std::to_string(g);
    });
    return groups;
}

/// Noise quadratures for one slice sampled directly on the T_Qd grid. The power-law
/// process is drawn by circulant embedding and the exponential one by the exact AR(1)
/// update; both are exact at the grid points for any T_Qd / T_D.
inline NoiseTrace slice_quadratures(const QdyneGeometry& geom, EnvelopeKind kind, std::size_t n,
                                    std::uint64_t seed) {
    switch (kind) {
        case EnvelopeKind::Exponential:
            return detail::exact_ou_quadratures(geom.B_rms, geom.T_D, n, geom.dt, seed, "qdyne-ou");
        case EnvelopeKind::PowerLaw:
            return detail::circulant_powerlaw_quadratures(geom.B_rms, geom.T_D, n, geom.dt, seed, "qdyne-gp");
        case EnvelopeKind::Mixed: break;
    }
    throw ConfigError("slice_quadratures: the photon chain supports exponential and power-law noise only");
}

/// Photon counts for `n_slices` independent slices, concatenated. Within a slice,
/// readout j sees Phi_j = phi_rms (A_j cos(delta t_j) + D_j sin(delta t_j)) / B_rms,
/// is bright with probability (1 + sin Phi_j) / 2 and yields a Poisson count.
inline std::vector<double> simulate_qdyne_counts(const QdyneGeometry& geom, EnvelopeKind kind, std::size_t n_slices,
                                                 std::uint64_t seed) {
    geom.validate();
    const std::size_t n = geom.samples_per_slice;
    std::vector<double> counts(n_slices * n);
    const SeedTree tree(seed);
    SensorConfig cfg;
    cfg.eta0 = geom.eta0;
    cfg.eta1 = geom.eta1;
    const double scale = geom.phi_rms / geom.B_rms;
    for (std::size_t s = 0; s < n_slices; ++s) {
        const auto q = slice_quadratures(geom, kind, n, tree.child("noise", s).root());
        RandomStream rng = tree.stream("photon", s);
        double* out = counts.data() + s * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double theta = geom.delta * geom.dt * static_cast<double>(j);
            const double phi = scale * (q.a[j] * std::cos(theta) + q.d[j] * std::sin(theta));
            out[j] = static_cast<double>(sample_photons(0.5 * (1.0 + std::sin(phi)), cfg, rng));
        }
    }
    return counts;
}

}  // namespace nanonmr
