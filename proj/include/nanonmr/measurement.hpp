// SPDX-License-Identifier: Apache-2.0
//
// NV measurement chain: phase accumulation under dynamical decoupling,
// protocol readout signals and photon statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "nanonmr/diagnostics.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/noise.hpp"
#include "nanonmr/random.hpp"
#include "nanonmr/special_functions.hpp"

namespace nanonmr {

/// Electron gyromagnetic ratio [rad s^-1 T^-1].
inline constexpr double kGammaElectron = 1.76085963023e11;

struct SensorConfig {
    double depth_d = 2.9e-9;     ///< m
    double gamma_e = kGammaElectron;
    double B_rms = 1e-6;         ///< T
    double omega_L = 2.0 * std::numbers::pi * 1.9e6;  ///< rad/s
    double c_max = 0.3;
    double eta0 = 0.04;          ///< photons per readout, bright state
    double eta1 = 0.03;          ///< photons per readout, dark state
    double eta_ref = 0.0;        ///< reference count; zero when readouts are not normalised
    double T1 = 1.11e-3;         ///< s
    double T2 = 110e-6;          ///< s

    void validate() const {
        if (!(eta1 > 0.0 && eta1 < eta0)) throw ConfigError("SensorConfig: need 0 < eta1 < eta0");
        if (!(depth_d > 0.0)) throw ConfigError("SensorConfig: depth must be > 0");
        if (!(B_rms > 0.0)) throw ConfigError("SensorConfig: B_rms must be > 0");
        if (!(T1 > T2 && T2 > 0.0)) throw ConfigError("SensorConfig: need T1 > T2 > 0");
        if (eta_ref > 0.0 && std::abs(c_max - (eta0 - eta1) / eta_ref) > 1e-9 * std::max(1.0, c_max))
            throw ConfigError("SensorConfig: c_max must equal (eta0 - eta1)/eta_ref");
    }

    /// Sets eta_ref and c_max together so the contrast invariant holds.
    void set_reference_count(double eta_reference) {
        eta_ref = eta_reference;
        c_max = (eta0 - eta1) / eta_ref;
    }
};

enum class DDFamily { KDD4, XY8 };

inline std::string_view to_string(DDFamily f) { return f == DDFamily::KDD4 ? "KDD4" : "XY8"; }

struct DDSequence {
    std::size_t n_pulses = 8;
    double tau = 0.0;  ///< s, spacing between pulse centres
    DDFamily family = DDFamily::XY8;
    std::size_t order = 1;

    [[nodiscard]] double total_duration() const noexcept { return static_cast<double>(n_pulses) * tau; }

    [[nodiscard]] double pulse_centre(std::size_t k) const noexcept {
        return tau * (0.5 + static_cast<double>(k));
    }

    /// +-1 modulation at time t after the sequence start; flips at every pulse centre.
    [[nodiscard]] int modulation(double t) const noexcept {
        const double flips = std::floor(t / tau + 0.5);
        return (static_cast<long long>(flips) % 2 == 0) ? 1 : -1;
    }

    /// XY8-order: 8 pulses per repetition.
    static DDSequence xy8(std::size_t order, double tau) { return {8 * order, tau, DDFamily::XY8, order}; }
    /// KDD4-order: 20 pulses per repetition.
    static DDSequence kdd4(std::size_t order, double tau) { return {20 * order, tau, DDFamily::KDD4, order}; }
    /// tau = pi / omega_L.
    static double resonant_tau(double omega_L) { return std::numbers::pi / omega_L; }
};

/// RMS phase (2/pi) gamma_e B_rms N tau sinc(N (pi - omega_L tau)).
inline double phi_rms(const SensorConfig& cfg, const DDSequence& seq) {
    if (seq.n_pulses < 1 || !(seq.tau > 0.0)) throw DomainError("phi_rms: need N >= 1 and tau > 0");
    const double N = static_cast<double>(seq.n_pulses);
    return 2.0 / std::numbers::pi * cfg.gamma_e * cfg.B_rms * N * seq.tau *
           special::sinc(N * (std::numbers::pi - cfg.omega_L * seq.tau));
}

/// Phase gamma_e int B(t) f(t - start) dt over [start, start + N tau]. The field is
/// linearly interpolated between samples and integrated exactly on every piece
/// between consecutive samples and pulse centres.
inline double accumulated_phase(const NoiseTrace& field, const DDSequence& seq, double gamma_e, double start) {
    if (field.size() < 2) throw DataError("accumulated_phase: trace too short");
    if (seq.n_pulses < 1 || !(seq.tau > 0.0)) throw DomainError("accumulated_phase: need N >= 1 and tau > 0");
    const double dt = field.dt;
    if (dt > seq.tau / 20.0 * (1.0 + 1e-12))
        throw DataError("accumulated_phase: trace step " + std::to_string(dt) + " s exceeds tau/20 = " +
                        std::to_string(seq.tau / 20.0) + " s");
    const double end = start + seq.total_duration();
    const double t_last = dt * static_cast<double>(field.size() - 1);
    if (start < 0.0 || end > t_last * (1.0 + 1e-12))
        throw DataError("accumulated_phase: trace covers [0, " + std::to_string(t_last) +
                        "] s but the sequence needs [" + std::to_string(start) + ", " + std::to_string(end) + "] s");

    const auto& b = field.a;
    auto sample = [&](double t) {
        const double pos = std::clamp(t / dt, 0.0, static_cast<double>(b.size() - 1));
        const std::size_t j = std::min(static_cast<std::size_t>(pos), b.size() - 2);
        const double w = pos - static_cast<double>(j);
        return b[j] * (1.0 - w) + b[j + 1] * w;
    };

    double phase = 0.0;
    double sign = 1.0;
    double t0 = start;
    double b0 = sample(t0);
    std::size_t next_sample = static_cast<std::size_t>(std::floor(start / dt)) + 1;
    for (std::size_t k = 0; k <= seq.n_pulses; ++k) {
        const double boundary = (k < seq.n_pulses) ? start + seq.pulse_centre(k) : end;
        while (next_sample < b.size() && dt * static_cast<double>(next_sample) < boundary) {
            const double t1 = dt * static_cast<double>(next_sample);
            const double b1 = b[next_sample];
            phase += sign * 0.5 * (b0 + b1) * (t1 - t0);
            t0 = t1;
            b0 = b1;
            ++next_sample;
        }
        const double b1 = sample(boundary);
        phase += sign * 0.5 * (b0 + b1) * (boundary - t0);
        t0 = boundary;
        b0 = b1;
        sign = -sign;
    }
    return gamma_e * phase;
}

/// Correlation-spectroscopy signal c_max sin(phi1) sin(phi2).
inline double cs_readout_pair(double phi1, double phi2, double c_max) noexcept {
    return c_max * std::sin(phi1) * std::sin(phi2);
}

/// Qdyne population deviation (c_max / 2) sin(phi).
inline double qdyne_readout(double phi, double c_max) noexcept { return 0.5 * c_max * std::sin(phi); }

/// Photon count of one readout: the spin is projected (bright with probability p0)
/// and the count is Poisson with the rate of the projected state.
inline std::uint64_t sample_photons(double p0, const SensorConfig& cfg, RandomStream& rng) {
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("sample_photons: p0 must lie in [0, 1]");
    const bool bright = rng.uniform() < p0;
    return rng.poisson(bright ? cfg.eta0 : cfg.eta1);
}

/// Power-spectrum contrast c_max exp(-N tau / T2) exp(-Phi_rms^2 / 2).
inline double ps_expected_contrast(const SensorConfig& cfg, const DDSequence& seq) {
    const double phi = phi_rms(cfg, seq);
    const double decay = std::isinf(cfg.T2) ? 1.0 : std::exp(-seq.total_duration() / cfg.T2);
    return cfg.c_max * decay * std::exp(-0.5 * phi * phi);
}

/// Warns when a correlation-spectroscopy waiting time reaches T1.
inline void check_cs_waiting_time(const SensorConfig& cfg, double waiting_time) {
    if (waiting_time >= cfg.T1)
        warn("correlation spectroscopy waiting time " + std::to_string(waiting_time) + " s reaches T1 = " +
             std::to_string(cfg.T1) + " s");
}

}  // namespace nanonmr
