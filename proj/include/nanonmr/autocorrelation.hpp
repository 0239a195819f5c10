// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nanonmr/diagnostics.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/fft.hpp"

namespace nanonmr {

/// Correlation estimates on a uniform lag grid.
struct AutoCorrelation {
    std::vector<double> lags;          ///< seconds, lags[k] = k * dt
    std::vector<double> values;
    std::vector<std::size_t> counts;   ///< products averaged per lag
    double dt = 1.0;
    std::string source_meta;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool empty() const noexcept { return values.empty(); }

    /// Sub-range [first, last) of lags, keeping metadata.
    [[nodiscard]] AutoCorrelation window(std::size_t first, std::size_t last) const {
        if (first > last || last > size()) throw DataError("AutoCorrelation::window: bad range");
        AutoCorrelation out;
        out.dt = dt;
        out.source_meta = source_meta;
        out.lags.assign(lags.begin() + static_cast<std::ptrdiff_t>(first), lags.begin() + static_cast<std::ptrdiff_t>(last));
        out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first), values.begin() + static_cast<std::ptrdiff_t>(last));
        out.counts.assign(counts.begin() + static_cast<std::ptrdiff_t>(first), counts.begin() + static_cast<std::ptrdiff_t>(last));
        return out;
    }
};

/// Unbiased autocovariance C(k) = 1/(n-k) sum_t (x_t - xbar)(x_{t+k} - xbar), k = 0..max_lag.
inline AutoCorrelation autocorrelate(std::span<const double> x, std::size_t max_lag, double dt = 1.0) {
    const std::size_t n = x.size();
    if (n < 2 || 2 * max_lag >= n)
        throw DataError("autocorrelate: max_lag must be < n/2 (n=" + std::to_string(n) +
                        ", max_lag=" + std::to_string(max_lag) + ")");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> centred(n);
    bool constant = true;
    for (std::size_t i = 0; i < n; ++i) {
        centred[i] = x[i] - mean;
        if (x[i] != x[0]) constant = false;
    }

    AutoCorrelation ac;
    ac.dt = dt;
    ac.lags.resize(max_lag + 1);
    ac.values.assign(max_lag + 1, 0.0);
    ac.counts.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        ac.lags[k] = static_cast<double>(k) * dt;
        ac.counts[k] = n - k;
    }
    if (constant) {
        warn("autocorrelate: constant trace, correlation set to zero");
        return ac;
    }
    const auto sums = fft::linear_autocorrelation_sums(centred, max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) ac.values[k] = sums[k] / static_cast<double>(n - k);
    return ac;
}

/// Splits x into consecutive slices of slice_len samples, autocorrelates each,
/// and averages non-overlapping groups of `group` slices. A trailing partial
/// slice, and slices that do not fill a group, are dropped with a warning.
inline std::vector<AutoCorrelation> slice_average(std::span<const double> x, std::size_t slice_len,
                                                  std::size_t group, std::size_t max_lag, double dt = 1.0) {
    if (slice_len == 0 || group == 0) throw ConfigError("slice_average: slice_len and group must be positive");
    if (x.size() < slice_len * group)
        throw DataError("slice_average: trace shorter than one group of slices");
    const std::size_t n_slices = x.size() / slice_len;
    const std::size_t n_groups = n_slices / group;
    if (x.size() % slice_len != 0)
        warn("slice_average: dropping " + std::to_string(x.size() % slice_len) + " samples of a partial slice");
    if (n_slices % group != 0)
        warn("slice_average: dropping " + std::to_string(n_slices % group) + " slices that do not fill a group");

    std::vector<AutoCorrelation> out;
    out.reserve(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        AutoCorrelation avg;
        for (std::size_t s = 0; s < group; ++s) {
            const std::size_t begin = (g * group + s) * slice_len;
            auto ac = autocorrelate(x.subspan(begin, slice_len), max_lag, dt);
            if (s == 0) {
                avg = std::move(ac);
                continue;
            }
            for (std::size_t k = 0; k < avg.size(); ++k) {
                avg.values[k] += ac.values[k];
                avg.counts[k] += ac.counts[k];
            }
        }
        for (double& v : avg.values) v /= static_cast<double>(group);
        avg.source_meta = "slice_len=" + std::to_string(slice_len) + ";group=" + std::to_string(group) +
                          ";group_index=" + std::to_string(g);
        out.push_back(std::move(avg));
    }
    return out;
}

}  // namespace nanonmr
