// SPDX-License-Identifier: Apache-2.0
//
// Least-squares fits of a0 + a1 cos(delta t + phi) C(t) to correlation data:
// single local fits, multi-start global fits and FFT-seeded local fits.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/optimize.hpp"
#include "nanonmr/parallel.hpp"
#include "nanonmr/periodogram.hpp"
#include "nanonmr/random.hpp"

namespace nanonmr {

enum FitParam : std::size_t { kA0 = 0, kA1 = 1, kDelta = 2, kPhi = 3, kTD = 4, kTE = 5 };
inline constexpr std::size_t kNumFitParams = 6;
using FitVector = std::array<double, kNumFitParams>;
using FixedMask = std::array<bool, kNumFitParams>;

inline constexpr std::array<const char*, kNumFitParams> kFitParamNames = {"a0", "a1", "delta", "phi", "T_D", "T_E"};

struct FitBounds {
    FitVector lo{};
    FitVector hi{};

    [[nodiscard]] bool contains(const FitVector& v, const FixedMask& fixed) const {
        for (std::size_t i = 0; i < kNumFitParams; ++i)
            if (!fixed[i] && !(v[i] >= lo[i] && v[i] <= hi[i])) return false;
        return true;
    }
};

struct FitResult {
    SignalModelParams params;
    FixedMask fixed_mask{};
    double r_squared = -std::numeric_limits<double>::infinity();
    double residual_rms = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::size_t n_restarts_used = 0;
    int iterations = 0;
    std::size_t best_restart = 0;
};

inline FitVector to_fit_vector(const SignalModelParams& p) {
    return {p.a0, p.a1, p.delta, p.phi, p.envelope.diffusion_time(), p.envelope.extra_time()};
}

inline SignalModelParams from_fit_vector(const FitVector& v, EnvelopeKind kind) {
    SignalModelParams p;
    p.a0 = v[kA0];
    p.a1 = v[kA1];
    p.delta = v[kDelta];
    p.phi = v[kPhi];
    p.envelope = kind == EnvelopeKind::Mixed ? EnvelopeModel::mixed(v[kTD], v[kTE])
                                             : EnvelopeModel::make(kind, v[kTD]);
    return p;
}

/// Evaluates the signal model on a fixed lag grid, caching envelope values per
/// (T_D, T_E) so finite-difference steps in a0, a1, delta and phi reuse them.
class SignalModelEvaluator {
public:
    SignalModelEvaluator(std::span<const double> times, EnvelopeKind kind) : times_(times.begin(), times.end()), kind_(kind) {}

    void evaluate(const FitVector& v, std::span<double> out) {
        const auto& env = envelope(v[kTD], kind_ == EnvelopeKind::Mixed ? v[kTE] : 0.0);
        for (std::size_t k = 0; k < times_.size(); ++k)
            out[k] = v[kA0] + v[kA1] * std::cos(v[kDelta] * times_[k] + v[kPhi]) * env[k];
    }

    [[nodiscard]] EnvelopeKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

private:
    struct Entry {
        double T_D = -1.0, T_E = -1.0;
        std::vector<double> values;
    };

    const std::vector<double>& envelope(double T_D, double T_E) {
        for (auto& e : cache_)
            if (e.T_D == T_D && e.T_E == T_E) return e.values;
        Entry& e = cache_[next_];
        next_ = (next_ + 1) % cache_.size();
        e.T_D = T_D;
        e.T_E = T_E;
        e.values.resize(times_.size());
        for (std::size_t k = 0; k < times_.size(); ++k) {
            const double t = times_[k];
            if (t == 0.0) {
                e.values[k] = 1.0;
                continue;
            }
            const double z = t / T_D;
            switch (kind_) {
                case EnvelopeKind::Exponential: e.values[k] = std::exp(-z); break;
                case EnvelopeKind::PowerLaw: e.values[k] = powerlaw_envelope(z); break;
                case EnvelopeKind::Mixed: e.values[k] = powerlaw_envelope(z) * std::exp(-t / T_E); break;
            }
        }
        return e.values;
    }

    std::vector<double> times_;
    EnvelopeKind kind_;
    std::array<Entry, 4> cache_{};
    std::size_t next_ = 0;
};

namespace detail {

inline double r_squared(std::span<const double> y, std::span<const double> model) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        ss_res += (y[k] - model[k]) * (y[k] - model[k]);
        ss_tot += (y[k] - mean) * (y[k] - mean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
}

inline void require_fit_input(const AutoCorrelation& ac, const FitBounds& bounds, const FixedMask& fixed) {
    if (ac.size() < 8) throw DataError("nlls_fit: need at least 8 correlation points, got " + std::to_string(ac.size()));
    if (!fixed[kDelta]) {
        const double span = ac.lags.back() - ac.lags.front();
        if (!(span * bounds.hi[kDelta] >= 2.0 * std::numbers::pi))
            throw DataError("nlls_fit: correlation spans less than one oscillation period of the search region");
    }
}

}  // namespace detail

/// One damped least-squares fit from `init`. Fixed parameters are removed from the
/// optimisation vector and returned bit-for-bit.
inline FitResult nlls_fit(const AutoCorrelation& ac, EnvelopeKind kind, const SignalModelParams& init,
                          const FitBounds& bounds, FixedMask fixed, const LmOptions& options = {}) {
    if (kind != EnvelopeKind::Mixed) fixed[kTE] = true;
    detail::require_fit_input(ac, bounds, fixed);
    FitVector start = to_fit_vector(init);
    if (!bounds.contains(start, fixed)) throw ConfigError("nlls_fit: initial parameters outside bounds");

    SignalModelEvaluator model(ac.lags, kind);
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < kNumFitParams; ++i)
        if (!fixed[i]) free.push_back(i);
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd x(nf), lo(nf), hi(nf), scale(nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
        const std::size_t i = free[static_cast<std::size_t>(j)];
        x[j] = start[i];
        lo[j] = bounds.lo[i];
        hi[j] = bounds.hi[i];
        const double width = std::isfinite(hi[j] - lo[j]) ? hi[j] - lo[j] : 0.0;
        scale[j] = std::max({std::abs(start[i]), 1e-3 * width, 1e-300});
        if (i == kPhi) scale[j] = 1.0;
    }

    std::vector<double> model_values(ac.size());
    auto residual = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& out) {
        FitVector v = start;
        for (Eigen::Index j = 0; j < nf; ++j) v[free[static_cast<std::size_t>(j)]] = xv[j];
        model.evaluate(v, model_values);
        for (std::size_t k = 0; k < ac.size(); ++k) out[static_cast<Eigen::Index>(k)] = ac.values[k] - model_values[k];
    };

    FitResult result;
    result.fixed_mask = fixed;
    LmResult lm;
    try {
        lm = levenberg_marquardt(residual, static_cast<Eigen::Index>(ac.size()), x, lo, hi, scale, options);
    } catch (const DomainError&) {
        result.params = init;
        return result;
    }
    FitVector best = start;
    for (Eigen::Index j = 0; j < nf; ++j) best[free[static_cast<std::size_t>(j)]] = lm.x[j];
    if (!fixed[kPhi]) best[kPhi] = wrap_phase(best[kPhi]);

    result.params = from_fit_vector(best, kind);
    if (fixed[kPhi]) result.params.phi = init.phi;
    model.evaluate(best, model_values);
    result.r_squared = detail::r_squared(ac.values, model_values);
    result.residual_rms = std::sqrt(2.0 * lm.cost / static_cast<double>(ac.size()));
    result.converged = lm.converged && std::isfinite(lm.cost);
    result.iterations = lm.iterations;
    result.n_restarts_used = 1;
    return result;
}

/// Multi-start fit: n_restarts inits drawn uniformly over the bounds of the free
/// parameters (fixed ones come from `fixed_values`). Returns the highest-R^2 result;
/// ties go to the lowest restart index, so the answer does not depend on threads.
inline FitResult global_fit(const AutoCorrelation& ac, EnvelopeKind kind, const FitBounds& bounds,
                            const FixedMask& fixed, const SignalModelParams& fixed_values, std::size_t n_restarts,
                            std::uint64_t seed, const LmOptions& options = {}) {
    if (n_restarts == 0) throw ConfigError("global_fit: need at least one restart");
    FixedMask mask = fixed;
    if (kind != EnvelopeKind::Mixed) mask[kTE] = true;
    detail::require_fit_input(ac, bounds, mask);
    const SeedTree tree(seed);
    const FitVector base = to_fit_vector(fixed_values);

    std::vector<FitResult> results(n_restarts);
    parallel_for(n_restarts, [&](std::size_t r) {
        RandomStream rng = tree.stream("restarts", r);
        FitVector v = base;
        for (std::size_t i = 0; i < kNumFitParams; ++i) {
            const double u = rng.uniform();
            if (!mask[i]) v[i] = bounds.lo[i] + u * (bounds.hi[i] - bounds.lo[i]);
        }
        if (kind == EnvelopeKind::Mixed && !(v[kTE] > v[kTD])) v[kTE] = std::min(bounds.hi[kTE], 2.0 * v[kTD]);
        SignalModelParams init;
        try {
            init = from_fit_vector(v, kind);
        } catch (const DomainError&) {
            return;  // mixed init with T_E <= T_D inside the bounds; skip this start
        }
        init.phi = v[kPhi];
        results[r] = nlls_fit(ac, kind, init, bounds, mask, options);
    });

    std::size_t best = 0;
    bool any = false;
    for (std::size_t r = 0; r < n_restarts; ++r) {
        if (!std::isfinite(results[r].r_squared)) continue;
        if (!any || results[r].r_squared > results[best].r_squared) {
            best = r;
            any = true;
        }
    }
    FitResult out = any ? results[best] : FitResult{};
    if (!any) {
        out.params = fixed_values;
        out.fixed_mask = mask;
        out.converged = false;
    }
    out.n_restarts_used = n_restarts;
    out.best_restart = best;
    return out;
}

/// Decay time from the correlation half-life: the first lag after which the
/// magnitude never again exceeds half its maximum, divided by ln 2.
inline double half_life_decay_time(const AutoCorrelation& ac) {
    double peak = 0.0;
    for (double v : ac.values) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw DataError("half_life_decay_time: all-zero correlation");
    std::size_t k = ac.size();
    while (k > 0 && std::abs(ac.values[k - 1]) < 0.5 * peak) --k;
    const double t_half = k < ac.size() ? ac.lags[k] : ac.lags.back();
    return std::max(t_half, ac.dt) / std::numbers::ln2;
}

/// Single fit seeded from the FFT peak (delta), the largest correlation magnitude (a1),
/// the half-life decay time (T_D) and phi = 0. Inits are clamped into the bounds.
/// Amplitude and decay time are read from `seed_source` when given (e.g. the
/// correlation of the whole record), otherwise from `ac`.
inline FitResult local_fit(const AutoCorrelation& ac, EnvelopeKind kind, const FftSpectrum& spectrum,
                           const FitBounds& bounds, const FixedMask& fixed, const SignalModelParams& fixed_values,
                           const LmOptions& options = {}, const AutoCorrelation* seed_source = nullptr) {
    if (!spectrum.has_peak()) throw DataError("local_fit: spectrum has no peak");
    const AutoCorrelation& src = seed_source ? *seed_source : ac;
    FitVector v = to_fit_vector(fixed_values);
    auto seed_value = [&](std::size_t i, double value) {
        if (!fixed[i]) v[i] = std::clamp(value, bounds.lo[i], bounds.hi[i]);
    };
    double peak = 0.0;
    for (double x : src.values) peak = std::max(peak, std::abs(x));
    seed_value(kA0, 0.0);
    seed_value(kA1, peak);
    seed_value(kDelta, 2.0 * std::numbers::pi * *spectrum.peak_freq);
    seed_value(kPhi, 0.0);
    seed_value(kTD, half_life_decay_time(src));
    if (kind == EnvelopeKind::Mixed) seed_value(kTE, std::max(50.0 * v[kTD], bounds.lo[kTE]));
    SignalModelParams init = from_fit_vector(v, kind);
    init.phi = v[kPhi];
    return nlls_fit(ac, kind, init, bounds, fixed, options);
}

}  // namespace nanonmr
