// SPDX-License-Identifier: Apache-2.0
//
// Correlation envelopes C(t/T_D) for diffusing nuclear spins and the
// oscillatory signal model a0 + a1 cos(delta t + phi) C(t/T_D).
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include "nanonmr/diagnostics.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/special_functions.hpp"

namespace nanonmr {

/// Prefactor K of the long-time tail G(z) ~ K z^{-3/2}, equal to 32/(15 sqrt(pi)).
inline constexpr double kPowerLawTailPrefactor = 32.0 / (15.0 * special::kSqrtPi);

/// Below this z the power-law envelope is evaluated from its small-z expansion.
inline constexpr double kPowerLawSmallSwitch = 1e-3;
/// Above this z the power-law envelope is evaluated from its convergent series in z^{-1/2}.
inline constexpr double kPowerLawLargeSwitch = 25.0;

namespace detail {

// Small-z expansion G = 1 - 6 z + (4/sqrt(pi)) sum_j b_j z^{j + 1/2}, derived from the asymptotic
// series erfcx(x) ~ (1/(x sqrt(pi))) sum_m (-1)^m (2m-1)!!/(2x^2)^m at x = z^{-1/2}.
struct PowerLawSmallSeries {
    static constexpr int kTerms = 8;
    std::array<double, kTerms + 1> odd{};  // coefficient of y^{2j+1}, y = sqrt(z)

    PowerLawSmallSeries() {
        std::array<double, kTerms + 3> a{};
        a[0] = 1.0;
        for (std::size_t m = 1; m < a.size(); ++m) a[m] = -a[m - 1] * (2.0 * m - 1.0) / 2.0;
        for (int j = 1; j <= kTerms; ++j) {
            const double b = -a[j + 2] + a[j + 1] - 1.75 * a[j] + 1.5 * a[j - 1];
            odd[j] = 4.0 / special::kSqrtPi * b;
        }
    }

    [[nodiscard]] double operator()(double z) const noexcept {
        const double y = std::sqrt(z);
        const double y2 = z;
        double sum = 0.0;
        for (int j = kTerms; j >= 1; --j) sum = sum * y2 + odd[j];
        return 1.0 - 6.0 * z + sum * y2 * y;
    }
};

// Large-z series G = sum_{k>=3} g_k x^k, x = z^{-1/2}, from the Maclaurin series
// erfcx(x) = sum_n (-x)^n / Gamma(1 + n/2). Terms with k < 3 cancel identically.
struct PowerLawLargeSeries {
    static constexpr int kMaxPower = 34;
    std::array<double, kMaxPower + 1> g{};

    PowerLawLargeSeries() {
        auto c = [](int n) -> double {
            if (n < 0) return 0.0;
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            return sign / std::tgamma(1.0 + 0.5 * n);
        };
        for (int k = 3; k <= kMaxPower; ++k) {
            double bracket = special::kSqrtPi * (-c(k - 4) + c(k - 2) - 1.75 * c(k) + 1.5 * c(k + 2));
            if (k == 3) bracket += 1.0;
            g[k] = 4.0 / special::kSqrtPi * bracket;
        }
    }

    [[nodiscard]] double operator()(double z) const noexcept {
        const double x = 1.0 / std::sqrt(z);
        double sum = 0.0;
        for (int k = kMaxPower; k >= 3; --k) sum = sum * x + g[k];
        return sum * x * x * x;
    }
};

inline const PowerLawSmallSeries& small_series() {
    static const PowerLawSmallSeries s;
    return s;
}

inline const PowerLawLargeSeries& large_series() {
    static const PowerLawLargeSeries s;
    return s;
}

// Closed form with the erfc(z^{-1/2}) exp(1/z) product replaced by erfcx(z^{-1/2}).
inline double powerlaw_closed_form(double z) noexcept {
    const double sz = std::sqrt(z);
    const double inv_sz = 1.0 / sz;
    const double poly = inv_sz * inv_sz * inv_sz - 1.5 * inv_sz + 0.25 * special::kSqrtPi + 3.0 * sz -
                        1.5 * special::kSqrtPi * z;
    const double bracket = -inv_sz * inv_sz * inv_sz + inv_sz - 1.75 * sz + 1.5 * z * sz;
    const double tail = special::kSqrtPi * inv_sz * special::erfcx(inv_sz) * bracket;
    return 4.0 / special::kSqrtPi * (poly + tail);
}

}  // namespace detail

/// exp(-z), the single-time-constant envelope.
inline double exp_envelope(double z) {
    if (!(z >= 0.0)) throw DomainError("exp_envelope: z must be >= 0");
    return std::exp(-z);
}

/// Power-law envelope G(z) for dipolar coupling to spins diffusing above a planar surface.
///
/// Nearly exponential for z << 1 (G ~ 1 - 6z) and G ~ K z^{-3/2} for z >> 1.
/// Defined for z > 0; the z -> 0+ limit is 1 and must be requested explicitly.
inline double powerlaw_envelope(double z) {
    if (!(z > 0.0)) throw DomainError("powerlaw_envelope: z must be > 0 (use the z->0+ limit 1)");
    if (std::isinf(z)) return 0.0;
    if (z < kPowerLawSmallSwitch) return detail::small_series()(z);
    if (z >= kPowerLawLargeSwitch) return detail::large_series()(z);
    return detail::powerlaw_closed_form(z);
}

enum class EnvelopeKind { Exponential, PowerLaw, Mixed };

inline std::string_view to_string(EnvelopeKind kind) {
    switch (kind) {
        case EnvelopeKind::Exponential: return "exponential";
        case EnvelopeKind::PowerLaw: return "powerlaw";
        case EnvelopeKind::Mixed: return "mixed";
    }
    return "unknown";
}

inline EnvelopeKind parse_envelope_kind(std::string_view name) {
    if (name == "exponential" || name == "exp") return EnvelopeKind::Exponential;
    if (name == "powerlaw" || name == "power-law" || name == "pl") return EnvelopeKind::PowerLaw;
    if (name == "mixed") return EnvelopeKind::Mixed;
    throw ConfigError("unknown envelope model '" + std::string(name) + "'");
}

/// G(t/T_D) exp(-t/T_E). Warns (but still evaluates) when T_E <= T_D.
inline double mixed_envelope(double t, double diffusion_time, double extra_time) {
    if (!(t >= 0.0)) throw DomainError("mixed_envelope: t must be >= 0");
    if (!(diffusion_time > 0.0) || !(extra_time > 0.0))
        throw DomainError("mixed_envelope: time constants must be positive");
    if (extra_time <= diffusion_time) warn("mixed_envelope: T_E <= T_D, outside the slow-extra-decay regime");
    const double g = (t == 0.0) ? 1.0 : powerlaw_envelope(t / diffusion_time);
    return g * std::exp(-t / extra_time);
}

/// Normalised correlation envelope C(t/T_D) with C(0) = 1.
class EnvelopeModel {
public:
    static EnvelopeModel exponential(double diffusion_time) {
        return EnvelopeModel(EnvelopeKind::Exponential, diffusion_time, kInf);
    }
    static EnvelopeModel power_law(double diffusion_time) {
        return EnvelopeModel(EnvelopeKind::PowerLaw, diffusion_time, kInf);
    }
    static EnvelopeModel mixed(double diffusion_time, double extra_time) {
        if (!(extra_time > diffusion_time))
            throw DomainError("EnvelopeModel::mixed requires T_E > T_D");
        return EnvelopeModel(EnvelopeKind::Mixed, diffusion_time, extra_time);
    }
    static EnvelopeModel make(EnvelopeKind kind, double diffusion_time, double extra_time = kInf) {
        switch (kind) {
            case EnvelopeKind::Exponential: return exponential(diffusion_time);
            case EnvelopeKind::PowerLaw: return power_law(diffusion_time);
            case EnvelopeKind::Mixed: return mixed(diffusion_time, extra_time);
        }
        throw ConfigError("unknown envelope kind");
    }

    [[nodiscard]] EnvelopeKind kind() const noexcept { return kind_; }
    [[nodiscard]] double diffusion_time() const noexcept { return diffusion_time_; }
    [[nodiscard]] double extra_time() const noexcept { return extra_time_; }

    /// C(t/T_D) for t >= 0.
    [[nodiscard]] double operator()(double t) const {
        if (!(t >= 0.0)) throw DomainError("EnvelopeModel: t must be >= 0");
        if (t == 0.0) return 1.0;
        const double z = t / diffusion_time_;
        switch (kind_) {
            case EnvelopeKind::Exponential: return std::exp(-z);
            case EnvelopeKind::PowerLaw: return powerlaw_envelope(z);
            case EnvelopeKind::Mixed: return powerlaw_envelope(z) * std::exp(-t / extra_time_);
        }
        return 0.0;
    }

    void evaluate(std::span<const double> times, std::span<double> out) const {
        for (std::size_t i = 0; i < times.size(); ++i) out[i] = (*this)(times[i]);
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << to_string(kind_) << "(T_D=" << diffusion_time_;
        if (kind_ == EnvelopeKind::Mixed) os << ", T_E=" << extra_time_;
        os << ")";
        return os.str();
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    EnvelopeModel(EnvelopeKind kind, double diffusion_time, double extra_time)
        : kind_(kind), diffusion_time_(diffusion_time), extra_time_(extra_time) {
        if (!(diffusion_time > 0.0)) throw DomainError("EnvelopeModel: T_D must be > 0");
    }

    EnvelopeKind kind_;
    double diffusion_time_;
    double extra_time_;
};

/// Parameters of a0 + a1 cos(delta t + phi) C(t/T_D).
struct SignalModelParams {
    double a0 = 0.0;
    double a1 = 0.0;     ///< amplitude, proportional to Phi_rms^2
    double delta = 0.0;  ///< undersampling angular frequency [rad/s]
    double phi = 0.0;    ///< artificial phase [rad], kept in [0, 2 pi)
    EnvelopeModel envelope = EnvelopeModel::exponential(1.0);
};

inline double wrap_phase(double phi) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

inline double signal_model(double t, const SignalModelParams& p) {
    if (!(t >= 0.0)) throw DomainError("signal_model: t must be >= 0");
    return p.a0 + p.a1 * std::cos(p.delta * t + p.phi) * p.envelope(t);
}

/// Noiseless phase covariance <Phi_1 Phi_2> = Phi_rms^2 cos(delta t) C(t/T_D) at separation t.
inline double correlation_kernel(double t, double phi_rms, double delta, const EnvelopeModel& envelope) {
    if (!(t >= 0.0)) throw DomainError("correlation_kernel: t must be >= 0");
    return phi_rms * phi_rms * std::cos(delta * t) * envelope(t);
}

}  // namespace nanonmr
