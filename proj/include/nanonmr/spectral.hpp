// SPDX-License-Identifier: Apache-2.0
//
// Power spectra of the correlation envelopes, the small-frequency cusp fit, and
// Fisher-information sensitivity comparisons between envelope models.
#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/optimize.hpp"
#include "nanonmr/parallel.hpp"
#include "nanonmr/special_functions.hpp"

namespace nanonmr {

/// One-sided spectrum S(omega) = 2 int_0^inf cos(omega t) cos(delta t) C(t) dt.
struct SpectrumProfile {
    std::vector<double> omegas;  ///< rad/s, ascending, >= 0
    std::vector<double> values;
    double omega_D = 0.0;        ///< 2 pi / T_D
    double delta = 0.0;
    std::string model_tag;

    [[nodiscard]] std::size_t size() const noexcept { return omegas.size(); }
};

namespace detail {

/// Value and first two derivatives of the envelope at t, for the tail expansion.
struct EnvelopeJet {
    double f = 0.0, d1 = 0.0, d2 = 0.0;
};

inline EnvelopeJet envelope_jet(const EnvelopeModel& env, double t) {
    const double T_D = env.diffusion_time();
    EnvelopeJet p;
    if (env.kind() == EnvelopeKind::Exponential) {
        p.f = std::exp(-t / T_D);
        p.d1 = -p.f / T_D;
        p.d2 = p.f / (T_D * T_D);
        return p;
    }
    // Large-z series sum_k g_k z^{-k/2}, term-wise differentiated.
    const auto& g = large_series().g;
    const double z = t / T_D;
    const double x = 1.0 / std::sqrt(z);
    double xk = x * x * x;
    for (int k = 3; k < static_cast<int>(g.size()); ++k, xk *= x) {
        const double h = 0.5 * k;
        p.f += g[k] * xk;
        p.d1 += -h * g[k] * xk / t;
        p.d2 += h * (h + 1.0) * g[k] * xk / (t * t);
    }
    if (env.kind() == EnvelopeKind::Mixed) {
        const double T_E = env.extra_time();
        const double e = std::exp(-t / T_E);
        const EnvelopeJet q = p;
        p.f = q.f * e;
        p.d1 = (q.d1 - q.f / T_E) * e;
        p.d2 = (q.d2 - 2.0 * q.d1 / T_E + q.f / (T_E * T_E)) * e;
    }
    return p;
}

/// int_T^inf C(t) dt.
inline double zero_frequency_tail(const EnvelopeModel& env, double T) {
    const double T_D = env.diffusion_time();
    switch (env.kind()) {
        case EnvelopeKind::Exponential: return T_D * std::exp(-T / T_D);
        case EnvelopeKind::PowerLaw: {
            const auto& g = large_series().g;
            const double Z = T / T_D;
            double sum = 0.0;
            for (int k = 3; k < static_cast<int>(g.size()); ++k) {
                const double h = 0.5 * k;
                sum += g[k] * std::pow(Z, 1.0 - h) / (h - 1.0);
            }
            return T_D * sum;
        }
        case EnvelopeKind::Mixed: {
            // Leading terms of the integration by parts against exp(-t/T_E).
            const auto p = envelope_jet(env, T);
            const double T_E = env.extra_time();
            return T_E * p.f + T_E * T_E * (p.d1 + p.f / T_E);
        }
    }
    return 0.0;
}

}  // namespace detail

/// S_0(omega) = 2 int_0^inf cos(omega t) C(t) dt.
///
/// The integral runs to T = max(200 T_D, 100 pi / omega, 40 T_E) on Gauss-Legendre panels
/// no wider than half an oscillation period; the remainder is added analytically
/// (integration by parts for omega > 0, closed-form tail integrals at omega = 0).
inline double cosine_transform(const EnvelopeModel& env, double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError("cosine_transform: omega must be finite and >= 0");
    using Quad = boost::math::quadrature::gauss<double, 20>;
    const double T_D = env.diffusion_time();
    double T = 200.0 * T_D;
    if (omega > 0.0) T = std::max(T, 100.0 * std::numbers::pi / omega);
    if (env.kind() == EnvelopeKind::Mixed) T = std::max(T, 40.0 * env.extra_time());
    const double half_period = omega > 0.0 ? std::numbers::pi / omega : std::numeric_limits<double>::infinity();

    auto integrand = [&](double t) { return std::cos(omega * t) * env(t); };
    double sum = 0.0;
    double a = 0.0;
    while (a < T) {
        const double width = std::min({half_period, std::max(0.25 * T_D, 0.25 * a), T - a});
        sum += Quad::integrate(integrand, a, a + width);
        a += width;
    }
    if (omega > 0.0) {
        const auto p = detail::envelope_jet(env, T);
        const double s = std::sin(omega * T), c = std::cos(omega * T);
        sum += -p.f * s / omega - p.d1 * c / (omega * omega) + p.d2 * s / (omega * omega * omega);
    } else {
        sum += detail::zero_frequency_tail(env, T);
    }
    return 2.0 * sum;
}

/// Checks that the grid is ascending, non-negative and resolves the envelope's features:
/// consecutive spacing at most 0.1 max(omega_D, omega).
inline void require_resolved_grid(std::span<const double> grid, double omega_D) {
    if (grid.empty()) throw ConfigError("numeric_spectrum: empty frequency grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw ConfigError("numeric_spectrum: grid values must be finite and >= 0");
        if (i == 0) continue;
        if (!(grid[i] > grid[i - 1])) throw ConfigError("numeric_spectrum: grid must be strictly ascending");
        const double limit = 0.1 * std::max(omega_D, grid[i - 1]);
        if (grid[i] - grid[i - 1] > limit * (1.0 + 1e-9))
            throw ConfigError("numeric_spectrum: grid spacing " + std::to_string(grid[i] - grid[i - 1]) + " rad/s at omega=" +
                              std::to_string(grid[i - 1]) + " exceeds the required " + std::to_string(limit) + " rad/s");
    }
}

/// S(omega) with the oscillation at delta: (S_0(|omega - delta|) + S_0(omega + delta)) / 2.
inline SpectrumProfile numeric_spectrum(const EnvelopeModel& env, double delta, std::span<const double> omega_grid) {
    if (!(delta >= 0.0)) throw DomainError("numeric_spectrum: delta must be >= 0");
    SpectrumProfile s;
    s.omega_D = 2.0 * std::numbers::pi / env.diffusion_time();
    require_resolved_grid(omega_grid, s.omega_D);
    s.delta = delta;
    s.model_tag = env.describe();
    s.omegas.assign(omega_grid.begin(), omega_grid.end());
    s.values.resize(s.omegas.size());
    parallel_for(s.omegas.size(), [&](std::size_t i) {
        const double w = s.omegas[i];
        s.values[i] = delta == 0.0 ? cosine_transform(env, w)
                                   : 0.5 * (cosine_transform(env, std::abs(w - delta)) + cosine_transform(env, w + delta));
    });
    return s;
}

/// 2 T_D / (1 + (omega T_D)^2), the exponential envelope's spectrum in this convention.
inline double lorentzian(double omega, double T_D) { return 2.0 * T_D / (1.0 + omega * omega * T_D * T_D); }

/// {0} followed by `n` log-spaced points in [lo, hi] * omega_D.
inline std::vector<double> log_frequency_grid(double omega_D, double lo, double hi, std::size_t n, bool with_zero = true) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw ConfigError("log_frequency_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> grid;
    if (with_zero) grid.push_back(0.0);
    for (std::size_t i = 0; i < n; ++i)
        grid.push_back(omega_D * lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
    return grid;
}

/// Least-squares log-log slope of values against omegas over [lo, hi] (rad/s).
inline double loglog_slope(const SpectrumProfile& s, double lo, double hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.omegas[i] < lo || s.omegas[i] > hi || !(s.omegas[i] > 0.0) || !(s.values[i] > 0.0)) continue;
        const double x = std::log(s.omegas[i]), y = std::log(s.values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) throw DataError("loglog_slope: fewer than three points in the window");
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

/// Trapezoidal integral of S over the profile's grid. With `complete_tail`, the part above
/// the last grid point is added assuming S falls as omega^-2 there.
inline double spectral_integral(const SpectrumProfile& s, bool complete_tail = true) {
    if (s.size() < 2) throw DataError("spectral_integral: need at least two grid points");
    double sum = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) sum += 0.5 * (s.values[i] + s.values[i - 1]) * (s.omegas[i] - s.omegas[i - 1]);
    if (complete_tail) sum += s.values.back() * s.omegas.back();
    return sum;
}

struct CuspFit {
    double C1 = 0.0;        ///< S at omega -> 0
    double C2 = 0.0;        ///< coefficient of (omega / omega_D)^p
    double exponent = 0.0;  ///< p
    std::size_t n_points = 0;
};

/// Fits S(omega) = S0 (1 - c (omega/omega_D)^p) over omega in [lo, hi] * omega_D and
/// reports C1 = S0, C2 = S0 c and p. When the profile holds omega = 0, S0 is that value;
/// otherwise it is a free parameter.
inline CuspFit fit_small_omega_cusp(const SpectrumProfile& s, double lo = 1e-3, double hi = 5e-2) {
    if (!(hi >= 4.0 * lo && lo > 0.0)) throw DataError("fit_small_omega_cusp: window must span at least a factor 4");
    std::vector<double> x, y;
    std::optional<double> s0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = s.omegas[i] / s.omega_D;
        if (s.omegas[i] == 0.0) s0 = s.values[i];
        if (r >= lo && r <= hi) {
            x.push_back(r);
            y.push_back(s.values[i]);
        }
    }
    if (x.size() < 5) throw DataError("fit_small_omega_cusp: fewer than five grid points in the window");
    const double top = s0.value_or(*std::max_element(y.begin(), y.end()));
    const double drop = std::max(top - *std::min_element(y.begin(), y.end()), 1e-12 * top);
    // Parameters: b = c hi^p (relative drop at the window edge), p, and S0 unless known.
    const Eigen::Index n_par = s0 ? 2 : 3;
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& out) {
        const double amp = s0 ? *s0 : p[2];
        for (std::size_t i = 0; i < x.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = (amp * (1.0 - p[0] * std::pow(x[i] / hi, p[1])) - y[i]) / drop;
    };
    Eigen::VectorXd lo_b(n_par), hi_b(n_par), scale(n_par);
    lo_b.head(2) << -10.0, 0.05;
    hi_b.head(2) << 10.0, 4.0;
    scale.head(2) << drop / top, 1.0;
    if (!s0) {
        lo_b[2] = 0.0;
        hi_b[2] = 10.0 * top;
        scale[2] = top;
    }
    LmResult best;
    for (double p0 : {0.5, 1.0, 2.0}) {
        Eigen::VectorXd x0(n_par);
        x0.head(2) << drop / top, p0;
        if (!s0) x0[2] = top;
        auto r = levenberg_marquardt(residual, static_cast<Eigen::Index>(x.size()), x0, lo_b, hi_b, scale);
        if (r.cost < best.cost) best = r;
    }
    CuspFit fit;
    fit.C1 = s0 ? *s0 : best.x[2];
    fit.exponent = best.x[1];
    fit.C2 = fit.C1 * best.x[0] * std::pow(1.0 / hi, fit.exponent);
    fit.n_points = x.size();
    return fit;
}

// ---------------------------------------------------------------------------
// Fisher information

enum class Protocol { CS, Qdyne };

inline std::string_view to_string(Protocol p) { return p == Protocol::CS ? "CS" : "Qdyne"; }

/// Sampling times with one Gaussian noise level per point.
struct FisherSampling {
    std::vector<double> times;
    std::vector<double> sigma;

    /// Equally spaced correlation lags k dt, k = 1..n, with a common sigma.
    static FisherSampling uniform(double dt, std::size_t n, double sigma) {
        if (!(dt > 0.0) || !(sigma > 0.0)) throw DomainError("FisherSampling: dt and sigma must be > 0");
        FisherSampling s;
        s.times.resize(n);
        s.sigma.assign(n, sigma);
        for (std::size_t k = 0; k < n; ++k) s.times[k] = static_cast<double>(k + 1) * dt;
        return s;
    }

    /// Correlation-spectroscopy grid t_k = k dt, k = 1..n. Each point takes time
    /// proportional to t_k, so at fixed total time its variance grows as t_k.
    static FisherSampling equal_time_cs(double dt, std::size_t n, double sigma_at_dt) {
        auto s = uniform(dt, n, sigma_at_dt);
        for (std::size_t k = 0; k < n; ++k) s.sigma[k] = sigma_at_dt * std::sqrt(s.times[k] / dt);
        return s;
    }
};

/// FI_delta = sum_k (d mu_k / d delta)^2 / sigma_k^2 for the signal model mu, with the
/// derivative by central differences.
inline double fisher_information(const SignalModelParams& p, const FisherSampling& s, double relative_step = 1e-5) {
    if (s.times.size() != s.sigma.size()) throw DomainError("fisher_information: times and sigma differ in length");
    for (double v : s.sigma)
        if (!(v > 0.0)) throw DomainError("fisher_information: noise sigma must be > 0");
    if (p.a1 == 0.0) return 0.0;
    const double h = relative_step * std::max(std::abs(p.delta), 1.0 / p.envelope.diffusion_time());
    double fi = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        const double t = s.times[k];
        const double c = p.envelope(t);
        const double up = p.a1 * std::cos((p.delta + h) * t + p.phi) * c;
        const double down = p.a1 * std::cos((p.delta - h) * t + p.phi) * c;
        const double d = (up - down) / (2.0 * h);
        fi += d * d / (s.sigma[k] * s.sigma[k]);
    }
    return fi;
}

struct SensitivityReport {
    Protocol protocol = Protocol::CS;
    double delta = 0.0;
    double T_D = 0.0;
    double T_E = std::numeric_limits<double>::infinity();
    double T_tot = 0.0;
    double fisher_pl = 0.0;
    double fisher_exp = 0.0;
    double ratio_closed_form = 0.0;
    std::string sampling_note;

    [[nodiscard]] double numeric_ratio() const { return fisher_exp > 0.0 ? fisher_pl / fisher_exp : std::numeric_limits<double>::infinity(); }
};

/// 1 / (delta T_D): exponential-to-power-law sensitivity ratio for correlation spectroscopy.
inline double sensitivity_ratio_cs(double delta, double T_D) {
    if (!(delta > 0.0) || !(T_D > 0.0)) throw DomainError("sensitivity_ratio_cs: delta and T_D must be > 0");
    return 1.0 / (delta * T_D);
}

/// log(delta T_tot) / (delta T_D)^2 for Qdyne.
inline double sensitivity_ratio_qdyne(double delta, double T_D, double T_tot) {
    if (!(delta > 0.0) || !(T_D > 0.0) || !(T_tot > 0.0)) throw DomainError("sensitivity_ratio_qdyne: arguments must be > 0");
    if (!(delta * T_tot > 1.0)) throw DomainError("sensitivity_ratio_qdyne: need delta T_tot > 1");
    return std::log(delta * T_tot) / ((delta * T_D) * (delta * T_D));
}

/// Power-law to mixed-model sensitivity ratio for Qdyne,
/// [Ei(-2 T_tot / T_E) - Ei(-2 / (delta T_E))] / log(delta T_tot).
/// The numerator is twice the tail integral int_{1/delta}^{T_tot} exp(-2t/T_E) / t dt that
/// replaces log(delta T_tot) once the extra exponential decay is present.
inline double sensitivity_ratio_mixed(double delta, double T_E, double T_tot) {
    if (!(delta > 0.0) || !(T_E > 0.0) || !(T_tot > 0.0)) throw DomainError("sensitivity_ratio_mixed: arguments must be > 0");
    const double denom = std::log(delta * T_tot);
    if (!(denom > 0.0)) throw DomainError("sensitivity_ratio_mixed: need log(delta T_tot) > 0");
    auto ei_neg = [](double x) { return x > 700.0 ? 0.0 : special::expint_ei(-x); };  // Ei(-x), underflows to 0
    return (ei_neg(2.0 * T_tot / T_E) - ei_neg(2.0 / (delta * T_E))) / denom;
}

/// The mixed-model ratio exactly as printed:
/// [Ei(-T_tot/T_E + delta T_tot) + T_E^3 delta^2 sinh(T_tot/T_E) / (1 + T_E^2 delta^2)] / log(delta T_tot).
inline double sensitivity_ratio_mixed_printed(double delta, double T_E, double T_tot) {
    if (!(delta > 0.0) || !(T_E > 0.0) || !(T_tot > 0.0)) throw DomainError("sensitivity_ratio_mixed_printed: arguments must be > 0");
    const double denom = std::log(delta * T_tot);
    if (!(denom > 0.0)) throw DomainError("sensitivity_ratio_mixed_printed: need log(delta T_tot) > 0");
    const double arg = -T_tot / T_E + delta * T_tot;
    const double ei = arg == 0.0 ? -std::numeric_limits<double>::infinity() : special::expint_ei(arg);
    const double second = T_E * T_E * T_E * delta * delta * std::sinh(T_tot / T_E) / (1.0 + T_E * T_E * delta * delta);
    return (ei + second) / denom;
}

/// Numeric FI for both models on the protocol's sampling, with the closed-form ratio.
/// CS: lags up to T_tot with variance proportional to the lag (equal time per point).
/// Qdyne: every lag up to T_tot with one common sigma.
inline SensitivityReport sensitivity_report(Protocol protocol, double delta, double T_D, double T_tot, double dt,
                                            double sigma = 1.0, double a1 = 1.0) {
    if (!(dt > 0.0) || !(T_tot > dt)) throw DomainError("sensitivity_report: need 0 < dt < T_tot");
    const auto n = static_cast<std::size_t>(std::floor(T_tot / dt));
    SensitivityReport r;
    r.protocol = protocol;
    r.delta = delta;
    r.T_D = T_D;
    r.T_tot = T_tot;
    const FisherSampling s = protocol == Protocol::CS ? FisherSampling::equal_time_cs(dt, n, sigma)
                                                      : FisherSampling::uniform(dt, n, sigma);
    r.sampling_note = protocol == Protocol::CS ? "cs: t_k = k dt, sigma_k^2 proportional to t_k"
                                               : "qdyne: lags k dt up to T_tot, constant sigma per lag";
    SignalModelParams p;
    p.a1 = a1;
    p.delta = delta;
    p.envelope = EnvelopeModel::power_law(T_D);
    r.fisher_pl = fisher_information(p, s);
    p.envelope = EnvelopeModel::exponential(T_D);
    r.fisher_exp = fisher_information(p, s);
    r.ratio_closed_form = protocol == Protocol::CS ? sensitivity_ratio_cs(delta, T_D) : sensitivity_ratio_qdyne(delta, T_D, T_tot);
    return r;
}

}  // namespace nanonmr
