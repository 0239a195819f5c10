// SPDX-License-Identifier: Apache-2.0
//
// CSV tables and key: value reports for the library's result types.
#pragma once

#include <cstddef>
#include <string>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/estimation.hpp"
#include "nanonmr/fitting.hpp"
#include "nanonmr/io.hpp"
#include "nanonmr/spectral.hpp"

namespace nanonmr {

/// lag_s, value, count.
inline CsvWriter to_csv(const AutoCorrelation& ac) {
    CsvWriter csv({"lag_s", "value", "count"});
    for (std::size_t k = 0; k < ac.size(); ++k)
        csv.add_row(std::vector<std::string>{format_number(ac.lags[k]), format_number(ac.values[k]),
                                             k < ac.counts.size() ? std::to_string(ac.counts[k]) : std::string()});
    return csv;
}

inline Report to_report(const FitResult& f) {
    Report r("fit");
    r.add("model", std::string(to_string(f.params.envelope.kind())));
    r.add("a0", f.params.a0).add("a1", f.params.a1).add("delta_rad_s", f.params.delta).add("phi", f.params.phi);
    r.add("T_D_s", f.params.envelope.diffusion_time()).add("T_E_s", f.params.envelope.extra_time());
    std::string fixed;
    for (std::size_t i = 0; i < kNumFitParams; ++i)
        if (f.fixed_mask[i]) fixed += (fixed.empty() ? "" : " ") + std::string(kFitParamNames[i]);
    r.add("fixed", fixed.empty() ? std::string("none") : fixed);
    r.add("r_squared", f.r_squared).add("residual_rms", f.residual_rms).add("converged", f.converged);
    r.add("iterations", static_cast<std::size_t>(f.iterations < 0 ? 0 : f.iterations));
    r.add("restarts", f.n_restarts_used).add("best_restart", f.best_restart);
    return r;
}

/// One row per fit: the fitted parameters and the fit quality.
inline CsvWriter to_csv(const std::vector<FitResult>& fits) {
    CsvWriter csv({"index", "model", "a0", "a1", "delta_rad_s", "phi", "T_D_s", "T_E_s", "r_squared", "converged"});
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& p = fits[i].params;
        csv.add_row(std::vector<std::string>{
            std::to_string(i), std::string(to_string(p.envelope.kind())), format_number(p.a0), format_number(p.a1),
            format_number(p.delta), format_number(p.phi), format_number(p.envelope.diffusion_time()),
            format_number(p.envelope.extra_time()), format_number(fits[i].r_squared),
            fits[i].converged ? "true" : "false"});
    }
    return csv;
}

/// Summary statistics followed by the raw estimators (space-separated).
inline Report to_report(const HistogramStats& h) {
    Report r("histogram");
    r.add("n", h.estimators.size()).add("reference", h.reference).add("rmse", h.rmse).add("mean", h.mean);
    r.add("std", h.std).add("lo", h.lo).add("hi", h.hi);
    std::string raw;
    for (double e : h.estimators) raw += (raw.empty() ? "" : " ") + format_number(e);
    r.add("estimators", raw);
    return r;
}

inline CsvWriter to_csv(const HistogramStats& h) {
    CsvWriter csv({"index", "estimator"});
    for (std::size_t i = 0; i < h.estimators.size(); ++i)
        csv.add_row(std::vector<std::string>{std::to_string(i), format_number(h.estimators[i])});
    return csv;
}

/// omega_rad_s, value.
inline CsvWriter to_csv(const SpectrumProfile& s) {
    CsvWriter csv({"omega_rad_s", "value"});
    for (std::size_t i = 0; i < s.size(); ++i) csv.add_row(std::vector<double>{s.omegas[i], s.values[i]});
    return csv;
}

inline Report to_report(const SensitivityReport& s) {
    Report r("sensitivity-point");
    r.add("protocol", std::string(to_string(s.protocol))).add("delta_rad_s", s.delta).add("T_D_s", s.T_D);
    r.add("T_E_s", s.T_E).add("T_tot_s", s.T_tot).add("fisher_powerlaw", s.fisher_pl);
    r.add("fisher_exponential", s.fisher_exp).add("ratio_numeric", s.numeric_ratio());
    r.add("ratio_closed_form", s.ratio_closed_form).add("sampling", s.sampling_note);
    return r;
}

/// Row-per-value CSV of a trace. Meant for small traces; larger ones are refused.
inline CsvWriter to_csv(const TraceFile& t, std::size_t max_values = 1000000) {
    if (t.values.size() > max_values)
        throw DataError("trace CSV export: " + std::to_string(t.values.size()) + " values exceed the limit of " +
                        std::to_string(max_values));
    if (t.content == TraceContent::PhotonCounts) {
        CsvWriter csv({"index", "time_s", "counts"});
        for (std::size_t i = 0; i < t.values.size(); ++i)
            csv.add_row(std::vector<std::string>{std::to_string(i), format_number(static_cast<double>(i) * t.dt),
                                                 format_number(t.values[i])});
        return csv;
    }
    CsvWriter csv({"group", "lag_s", "value"});
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        const std::size_t g = i / t.max_lag, k = i % t.max_lag + 1;
        csv.add_row(std::vector<std::string>{std::to_string(g), format_number(static_cast<double>(k) * t.dt),
                                             format_number(t.values[i])});
    }
    return csv;
}

}  // namespace nanonmr
