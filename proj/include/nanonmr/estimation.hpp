// SPDX-License-Identifier: Apache-2.0
//
// Post-processing around the fits: drift removal, default search bounds,
// estimator-ensemble statistics and the depth / diffusion-coefficient chain.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/diagnostics.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/fitting.hpp"
#include "nanonmr/optimize.hpp"
#include "nanonmr/periodogram.hpp"

namespace nanonmr {

struct DetrendResult {
    AutoCorrelation corrected;
    std::vector<double> removed;  ///< b1 exp(-t / T_slow) on the lag grid (zeros if not applied)
    double b0 = 0.0;
    double b1 = 0.0;
    double T_slow = 0.0;
    double T_D = 0.0;             ///< decay time of the oscillatory part in the joint fit
    bool applied = false;
};

/// Jointly fits b0 + b1 exp(-t/T_slow) + a1 cos(delta t + phi) C(t/T_D) and subtracts the
/// slow exponential. If T_slow is not at least 5 T_D the two decays are not separable;
/// nothing is subtracted and a warning is issued. The oscillation is searched above
/// `min_freq_hz` (default: three cycles over the data span); starts are taken at the
/// spectral peak and on a log-spaced frequency grid up to a quarter of the sampling rate,
/// since a strong slow decay can hide the oscillation in the spectrum.
inline DetrendResult detrend_exponential(const AutoCorrelation& ac, EnvelopeKind kind = EnvelopeKind::PowerLaw,
                                         std::size_t pad_factor = 8, double min_freq_hz = -1.0) {
    if (ac.size() < 10) throw DataError("detrend_exponential: need at least 10 correlation points");
    const double span = ac.lags.back();
    if (min_freq_hz < 0.0) min_freq_hz = 3.0 / span;
    const double max_freq_hz = 0.25 / ac.dt;
    if (!(max_freq_hz > min_freq_hz)) throw DataError("detrend_exponential: correlation too short to search for an oscillation");
    const auto spectrum = fft_spectrum(ac, pad_factor, min_freq_hz);
    if (!spectrum.has_peak()) throw DataError("detrend_exponential: correlation has no spectral peak");
    double peak = 0.0;
    for (double v : ac.values) peak = std::max(peak, std::abs(v));
    const double td0 = std::min(half_life_decay_time(ac), span / 10.0);

    std::vector<double> freq_seeds{*spectrum.peak_freq};
    constexpr int kGrid = 8;
    for (int i = 0; i < kGrid; ++i)
        freq_seeds.push_back(min_freq_hz * std::pow(max_freq_hz / min_freq_hz, (i + 0.5) / kGrid));

    // x = [b0, b1, T_slow, a1, delta, phi, T_D]
    SignalModelEvaluator osc(ac.lags, kind);
    std::vector<double> osc_values(ac.size());
    auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        const FitVector v{0.0, x[3], x[4], x[5], x[6], std::numeric_limits<double>::infinity()};
        osc.evaluate(v, osc_values);
        for (std::size_t k = 0; k < ac.size(); ++k)
            out[static_cast<Eigen::Index>(k)] = ac.values[k] - x[0] - x[1] * std::exp(-ac.lags[k] / x[2]) - osc_values[k];
    };
    const double two_pi = 2.0 * std::numbers::pi;
    Eigen::VectorXd lo(7), hi(7), scale(7);
    lo << -10 * peak, -10 * peak, ac.dt, 0.0, two_pi * 0.5 * min_freq_hz, -4 * std::numbers::pi, ac.dt;
    hi << 10 * peak, 10 * peak, 100.0 * span, 10 * peak, two_pi * 2.0 * max_freq_hz, 4 * std::numbers::pi, span;

    LmResult best;
    for (double f : freq_seeds) {
        for (double frac : {0.1, 0.5, 2.0}) {
            scale << peak, peak, span, peak, two_pi * f, 1.0, td0;
            Eigen::VectorXd x0(7);
            x0 << 0.0, 0.0, frac * span, peak, two_pi * f, 0.0, td0;
            auto fit = levenberg_marquardt(residual, static_cast<Eigen::Index>(ac.size()), x0, lo, hi, scale);
            if (fit.cost < best.cost) best = fit;
        }
    }

    DetrendResult out;
    out.corrected = ac;
    out.removed.assign(ac.size(), 0.0);
    out.b0 = best.x[0];
    out.b1 = best.x[1];
    out.T_slow = best.x[2];
    out.T_D = best.x[6];
    if (!(out.T_slow >= 5.0 * out.T_D)) {
        warn("detrend_exponential: slow decay (" + std::to_string(out.T_slow) + " s) not separable from T_D (" +
             std::to_string(out.T_D) + " s); no correction applied");
        return out;
    }
    out.applied = true;
    for (std::size_t k = 0; k < ac.size(); ++k) {
        out.removed[k] = out.b1 * std::exp(-ac.lags[k] / out.T_slow);
        out.corrected.values[k] -= out.removed[k];
    }
    out.corrected.source_meta += (out.corrected.source_meta.empty() ? "" : ";") + std::string("detrended");
    return out;
}

/// Search bounds: delta from the frequency window in Hz, a0 within +-3 sigma of the
/// data, a1 in (0, 3 max|C|], T_D between one lag step and the longest lag, phi in [0, 2 pi].
inline FitBounds default_bounds(const AutoCorrelation& ac, double f_lo_hz, double f_hi_hz) {
    if (!(f_hi_hz > f_lo_hz && f_lo_hz >= 0.0)) throw ConfigError("default_bounds: bad frequency window");
    double mean = 0.0, peak = 0.0;
    for (double v : ac.values) {
        mean += v;
        peak = std::max(peak, std::abs(v));
    }
    mean /= static_cast<double>(ac.size());
    double var = 0.0;
    for (double v : ac.values) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / static_cast<double>(ac.size()));
    FitBounds b;
    b.lo = {-3.0 * sigma, 1e-6 * peak, 2.0 * std::numbers::pi * f_lo_hz, 0.0, ac.dt, 2.0 * ac.dt};
    b.hi = {3.0 * sigma, 3.0 * peak, 2.0 * std::numbers::pi * f_hi_hz, 2.0 * std::numbers::pi, ac.lags.back(),
            1e3 * ac.lags.back()};
    return b;
}

struct HistogramStats {
    std::vector<double> estimators;  ///< all fields share the estimators' unit
    double reference = 0.0;
    double rmse = 0.0;
    double mean = 0.0;
    double std = 0.0;
    double lo = 0.0, hi = 0.0;       ///< search bounds
};

inline HistogramStats histogram_stats(std::span<const double> estimators, double reference, double lo, double hi) {
    if (estimators.size() < 2) throw DataError("histogram_stats: need at least two estimators");
    const double slack = 1e-9 * std::max(std::abs(lo), std::abs(hi));
    HistogramStats s;
    s.estimators.assign(estimators.begin(), estimators.end());
    s.reference = reference;
    s.lo = lo;
    s.hi = hi;
    double sum = 0.0, sq = 0.0;
    for (double e : estimators) {
        if (e < lo - slack || e > hi + slack) throw DataError("histogram_stats: estimator outside search bounds");
        sum += e;
        sq += (e - reference) * (e - reference);
    }
    const double n = static_cast<double>(estimators.size());
    s.mean = sum / n;
    s.rmse = std::sqrt(sq / n);
    double var = 0.0;
    for (double e : estimators) var += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(var / n);
    return s;
}

/// rmse of estimators spread uniformly over [lo, hi], about `reference`.
inline double flat_histogram_rmse(double lo, double hi, double reference) {
    const double w = hi - lo;
    const double offset = 0.5 * (lo + hi) - reference;
    return std::sqrt(w * w / 12.0 + offset * offset);
}

inline double rmse_ratio(const HistogramStats& pl, const HistogramStats& exp) {
    if (pl.estimators.size() != exp.estimators.size()) throw DataError("rmse_ratio: estimator counts differ");
    if (exp.rmse == 0.0) throw DataError("rmse_ratio: zero exponential-model rmse");
    return pl.rmse / exp.rmse;
}

/// d = calib * B_rms^{-2/3}.
inline double estimate_depth(double B_rms, double calib) {
    if (!(B_rms > 0.0) || !(calib > 0.0)) throw DomainError("estimate_depth: B_rms and calib must be > 0");
    return calib * std::pow(B_rms, -2.0 / 3.0);
}

/// The calib constant that maps B_rms to depth d.
inline double depth_calibration(double depth, double B_rms) {
    if (!(B_rms > 0.0) || !(depth > 0.0)) throw DomainError("depth_calibration: arguments must be > 0");
    return depth * std::pow(B_rms, 2.0 / 3.0);
}

/// D = d^2 / T_D.
inline double estimate_diffusion(double depth, double T_D) {
    if (!(depth > 0.0) || !(T_D > 0.0)) throw DomainError("estimate_diffusion: arguments must be > 0");
    return depth * depth / T_D;
}

}  // namespace nanonmr
