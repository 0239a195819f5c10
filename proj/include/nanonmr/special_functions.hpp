// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "nanonmr/errors.hpp"

namespace nanonmr::special {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Unnormalised sinc, sin(x)/x with sinc(0) = 1.
inline double sinc(double x) noexcept {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

namespace detail {

// Modified Lentz evaluation of erfc(x) exp(x^2) sqrt(pi) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
inline double erfcx_continued_fraction(double x) noexcept {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double f = x;
    double c = f;
    double d = 0.0;
    for (int n = 1; n < 500; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return 1.0 / (kSqrtPi * f);
}

// E1(y) for y > 1 by the continued fraction e^{-y} / (y + 1 - 1/(y + 3 - 4/(y + 5 - ...))).
inline double expint_e1_continued_fraction(double y) noexcept {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double b = y + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return h * std::exp(-y);
}

// E1(y) for 0 < y <= 1 by its power series.
inline double expint_e1_series(double y) noexcept {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -y / k;
        const double contribution = term / k;
        sum += contribution;
        if (std::abs(contribution) < 1e-18 * std::abs(sum)) break;
    }
    return -kEulerGamma - std::log(y) - sum;
}

}  // namespace detail

/// Scaled complementary error function erfc(x) exp(x^2).
///
/// Finite for all real x >= 0 and for moderately negative x; relative error
/// below 1e-13 on [0, inf).
inline double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) {
        if (x < -26.0) return std::numeric_limits<double>::infinity();
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x < 4.0) return std::erfc(x) * std::exp(x * x);
    if (x > 1e8) return 1.0 / (kSqrtPi * x);
    return detail::erfcx_continued_fraction(x);
}

/// Exponential integral Ei(x) = -PV int_{-x}^inf e^{-t}/t dt, x != 0.
inline double expint_ei(double x) {
    if (x == 0.0) throw DomainError("expint_ei: Ei(0) is -infinity");
    if (std::isnan(x)) return x;
    if (x < 0.0) {
        const double y = -x;
        return y <= 1.0 ? -detail::expint_e1_series(y) : -detail::expint_e1_continued_fraction(y);
    }
    if (x <= 40.0) {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k < 500; ++k) {
            term *= x / k;
            const double contribution = term / k;
            sum += contribution;
            if (contribution < 1e-18 * sum) break;
        }
        return kEulerGamma + std::log(x) + sum;
    }
    // Asymptotic expansion e^x/x * sum k!/x^k, truncated at its smallest term.
    double sum = 1.0;
    double term = 1.0;
    for (int k = 1; k < 100; ++k) {
        const double next = term * k / x;
        if (next > term) break;
        term = next;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return std::exp(x) / x * sum;
}

}  // namespace nanonmr::special
