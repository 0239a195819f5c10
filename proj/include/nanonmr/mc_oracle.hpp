// SPDX-License-Identifier: Apache-2.0
//
// Summary statistics of a Monte Carlo correlation: short-time exponential fit,
// long-time log-log slope, and the comparison with the heuristic curve.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/noise.hpp"

namespace nanonmr {

struct TailAnalysisOptions {
    double short_max = 0.3;                 ///< exponential fit over t <= short_max T_D
    double tail_lo = 5.0, tail_hi = 30.0;   ///< slope window in units of T_D
    double heuristic_max = 10.0;            ///< heuristic comparison over t <= heuristic_max T_D
    std::size_t bins_per_decade = 20;
    double max_ci_width = 0.5;
};

struct TailReport {
    double T_D = 0.0;
    double short_time = 0.0;           ///< fitted exponential decay time
    double short_time_se = 0.0;
    double short_max_rel_dev = 0.0;    ///< max |C / exp(-t/T) - 1| on the short window
    double slope = 0.0;
    double slope_se = 0.0;
    double slope_ci_lo = 0.0, slope_ci_hi = 0.0;  ///< 95% interval
    std::size_t tail_bins = 0;
    std::size_t tail_bins_dropped = 0;            ///< non-positive bins left out of the regression
    double heuristic_max_rel_dev = 0.0;
    bool insufficient_statistics = false;
    std::string flag_reason;
};

/// Analyses a normalised correlation C(t) with known diffusion time T_D.
///
/// The short-time fit is a regression of -log C on t over lags 0 < t <= short_max T_D.
/// The tail slope is an ordinary regression of log C on log t after averaging C in
/// logarithmic lag bins; its standard error comes from the regression residuals.
inline TailReport analyze_correlation_tail(const AutoCorrelation& ac, double T_D, const TailAnalysisOptions& opt = {}) {
    if (!(T_D > 0.0)) throw DomainError("analyze_correlation_tail: T_D must be > 0");
    if (ac.size() < 3) throw DataError("analyze_correlation_tail: correlation too short");
    if (ac.lags.back() < opt.tail_hi * T_D)
        throw DataError("analyze_correlation_tail: correlation ends before " + std::to_string(opt.tail_hi) + " T_D");
    TailReport r;
    r.T_D = T_D;

    // Short-time exponential.
    std::vector<double> ts, cs;
    for (std::size_t k = 0; k < ac.size(); ++k)
        if (ac.lags[k] > 0.0 && ac.lags[k] <= opt.short_max * T_D) {
            ts.push_back(ac.lags[k]);
            cs.push_back(ac.values[k]);
        }
    if (ts.size() < 3) throw DataError("analyze_correlation_tail: fewer than three short-time lags");
    // Least-squares decay rate of -log C through the origin, as for the envelope's own
    // short-time check; its standard error comes from the regression residuals.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(cs[i] > 0.0)) throw DataError("analyze_correlation_tail: non-positive correlation at short lags");
        num += ts[i] * -std::log(cs[i]);
        den += ts[i] * ts[i];
    }
    const double rate = num / den;
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double e = -std::log(cs[i]) - rate * ts[i];
        rss += e * e;
        r.short_max_rel_dev = std::max(r.short_max_rel_dev, std::abs(cs[i] / std::exp(-rate * ts[i]) - 1.0));
    }
    const double rate_se = std::sqrt(rss / std::max(1.0, static_cast<double>(ts.size()) - 1.0) / den);
    r.short_time = 1.0 / rate;
    r.short_time_se = rate_se / (rate * rate);

    // Long-time slope on logarithmic bins.
    std::vector<double> lx, ly;
    const double lmin = std::log10(opt.tail_lo * T_D), lmax = std::log10(opt.tail_hi * T_D);
    const auto n_bins = static_cast<std::size_t>(std::ceil((lmax - lmin) * static_cast<double>(opt.bins_per_decade)));
    std::size_t next = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double t0 = std::pow(10.0, lmin + (lmax - lmin) * static_cast<double>(b) / static_cast<double>(n_bins));
        const double t1 = std::pow(10.0, lmin + (lmax - lmin) * static_cast<double>(b + 1) / static_cast<double>(n_bins));
        double st = 0.0, sc = 0.0;
        std::size_t m = 0;
        while (next < ac.size() && ac.lags[next] < t0) ++next;
        for (std::size_t k = next; k < ac.size() && (ac.lags[k] < t1 || (b + 1 == n_bins && ac.lags[k] <= t1)); ++k) {
            st += ac.lags[k];
            sc += ac.values[k];
            ++m;
        }
        if (m == 0) continue;
        ++r.tail_bins;
        if (!(sc > 0.0)) {
            ++r.tail_bins_dropped;
            continue;
        }
        lx.push_back(std::log(st / static_cast<double>(m)));
        ly.push_back(std::log(sc / static_cast<double>(m)));
    }
    if (lx.size() >= 3) {
        const double n = static_cast<double>(lx.size());
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        r.slope = sxy / sxx;
        double rss = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double e = ly[i] - my - r.slope * (lx[i] - mx);
            rss += e * e;
        }
        r.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    } else {
        r.slope = std::numeric_limits<double>::quiet_NaN();
        r.slope_se = std::numeric_limits<double>::infinity();
    }
    r.slope_ci_lo = r.slope - 1.96 * r.slope_se;
    r.slope_ci_hi = r.slope + 1.96 * r.slope_se;

    // Heuristic overlay, expressed through T_D alone: 6 D t / d^2 = 6 t / T_D.
    for (std::size_t k = 0; k < ac.size() && ac.lags[k] <= opt.heuristic_max * T_D; ++k) {
        const double h = std::pow(1.0 + 6.0 * ac.lags[k] / T_D, -1.5);
        r.heuristic_max_rel_dev = std::max(r.heuristic_max_rel_dev, std::abs(ac.values[k] / h - 1.0));
    }

    if (!(r.slope_ci_hi - r.slope_ci_lo <= opt.max_ci_width)) {
        r.insufficient_statistics = true;
        r.flag_reason = "slope confidence interval wider than " + std::to_string(opt.max_ci_width);
    } else if (2 * r.tail_bins_dropped > r.tail_bins) {
        r.insufficient_statistics = true;
        r.flag_reason = "most tail bins are non-positive";
    }
    return r;
}

}  // namespace nanonmr
