// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/fft.hpp"

namespace nanonmr {

/// Magnitude spectrum of a correlation on the padded FFT grid.
struct FftSpectrum {
    std::vector<double> freqs;       ///< Hz
    std::vector<double> magnitudes;
    std::optional<double> peak_freq; ///< Hz, parabolic interpolation; empty for all-zero input
    std::optional<double> fwhm;      ///< Hz
    double bin_width = 0.0;          ///< Hz

    [[nodiscard]] bool has_peak() const noexcept { return peak_freq.has_value(); }
};

/// Zero-padded Fourier transform of a correlation. Values are placed on the grid
/// by their lag (lags[k] / dt), so a correlation without lag 0 is handled. The
/// DC bin is excluded from the peak search.
inline FftSpectrum fft_spectrum(const AutoCorrelation& ac, std::size_t pad_factor = 8,
                                double min_freq = 0.0, double max_freq = std::numeric_limits<double>::infinity()) {
    if (pad_factor < 1) throw ConfigError("fft_spectrum: pad_factor must be >= 1");
    if (ac.empty()) throw DataError("fft_spectrum: empty correlation");
    const double dt = ac.dt;
    const auto last_index = static_cast<std::size_t>(std::llround(ac.lags.back() / dt));
    const std::size_t n = last_index + 1;
    const std::size_t m = fft::good_size(n * pad_factor);

    fft::RealForward fwd(m);
    auto in = fwd.input();
    std::fill(in.begin(), in.end(), 0.0);
    bool all_zero = true;
    for (std::size_t k = 0; k < ac.size(); ++k) {
        in[static_cast<std::size_t>(std::llround(ac.lags[k] / dt))] = ac.values[k];
        if (ac.values[k] != 0.0) all_zero = false;
    }
    fwd.execute();

    FftSpectrum spec;
    spec.bin_width = 1.0 / (static_cast<double>(m) * dt);
    const auto out = fwd.output();
    spec.freqs.resize(out.size());
    spec.magnitudes.resize(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        spec.freqs[k] = static_cast<double>(k) * spec.bin_width;
        spec.magnitudes[k] = std::abs(out[k]);
    }
    if (all_zero) return spec;

    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (spec.freqs[k] < min_freq || spec.freqs[k] > max_freq) continue;
        if (spec.magnitudes[k] > best_mag) {
            best_mag = spec.magnitudes[k];
            best = k;
        }
    }
    if (best == 0) return spec;

    double offset = 0.0;
    if (best + 1 < out.size()) {
        const double a = spec.magnitudes[best - 1], b = spec.magnitudes[best], c = spec.magnitudes[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }
    spec.peak_freq = (static_cast<double>(best) + offset) * spec.bin_width;

    const double half = 0.5 * best_mag;
    std::size_t lo = best, hi = best;
    while (lo > 0 && spec.magnitudes[lo] > half) --lo;
    while (hi + 1 < out.size() && spec.magnitudes[hi] > half) ++hi;
    auto crossing = [&](std::size_t inside, std::size_t outside) {
        const double yi = spec.magnitudes[inside], yo = spec.magnitudes[outside];
        if (yi == yo) return spec.freqs[outside];
        const double w = (yi - half) / (yi - yo);
        return spec.freqs[inside] + w * (spec.freqs[outside] - spec.freqs[inside]);
    };
    const double left = spec.magnitudes[lo] <= half ? crossing(lo + 1, lo) : spec.freqs[lo];
    const double right = spec.magnitudes[hi] <= half ? crossing(hi - 1, hi) : spec.freqs[hi];
    spec.fwhm = right - left;
    return spec;
}

}  // namespace nanonmr
