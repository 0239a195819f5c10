// SPDX-License-Identifier: Apache-2.0
//
// Thin RAII layer over FFTW's double-precision real and complex transforms.
#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace nanonmr::fft {

namespace detail {
// The FFTW planner is not re-entrant; execution is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
    friend bool operator==(const FftwAllocator&, const FftwAllocator&) { return true; }
};
}  // namespace detail

using RealBuffer = std::vector<double, detail::FftwAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, detail::FftwAllocator<std::complex<double>>>;

/// Smallest m >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t good_size(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Forward real-to-half-complex transform of length n (output has n/2 + 1 bins).
class RealForward {
public:
    explicit RealForward(std::size_t n) : n_(n), in_(n), out_(n / 2 + 1) {
        std::lock_guard lock(detail::planner_mutex());
        plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.data(),
                                         reinterpret_cast<fftw_complex*>(out_.data()), FFTW_ESTIMATE));
    }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    std::span<double> input() noexcept { return in_; }
    std::span<const std::complex<double>> output() const noexcept { return out_; }
    void execute() { fftw_execute(plan_.get()); }

private:
    std::size_t n_;
    RealBuffer in_;
    ComplexBuffer out_;
    detail::Plan plan_;
};

/// Inverse half-complex-to-real transform of length n, unnormalised (FFTW convention).
class RealInverse {
public:
    explicit RealInverse(std::size_t n) : n_(n), in_(n / 2 + 1), out_(n) {
        std::lock_guard lock(detail::planner_mutex());
        plan_.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in_.data()),
                                         out_.data(), FFTW_ESTIMATE));
    }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    std::span<std::complex<double>> input() noexcept { return in_; }
    std::span<const double> output() const noexcept { return out_; }
    void execute() { fftw_execute(plan_.get()); }

private:
    std::size_t n_;
    ComplexBuffer in_;
    RealBuffer out_;
    detail::Plan plan_;
};

/// In-place complex transform; sign = FFTW_FORWARD or FFTW_BACKWARD, unnormalised.
class Complex {
public:
    Complex(std::size_t n, int sign) : n_(n), data_(n) {
        std::lock_guard lock(detail::planner_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(data_.data());
        plan_.reset(fftw_plan_dft_1d(static_cast<int>(n), p, p, sign, FFTW_ESTIMATE));
    }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    std::span<std::complex<double>> data() noexcept { return data_; }
    void execute() { fftw_execute(plan_.get()); }

private:
    std::size_t n_;
    ComplexBuffer data_;
    detail::Plan plan_;
};

/// Linear (non-circular) autocorrelation sums r[k] = sum_t x[t] x[t+k], k < max_lag,
/// for inputs of a fixed length. Plans and buffers are reused across calls.
class Autocorrelator {
public:
    Autocorrelator(std::size_t n, std::size_t max_lag)
        : n_(n), lags_(std::min(max_lag, n)), fwd_(good_size(n + max_lag)), inv_(fwd_.size()) {}

    [[nodiscard]] std::size_t input_size() const noexcept { return n_; }
    [[nodiscard]] std::size_t lags() const noexcept { return lags_; }

    /// Writes lags() sums into out.
    void sums(std::span<const double> x, std::span<double> out) {
        const std::size_t m = fwd_.size();
        auto in = fwd_.input();
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_), in.begin());
        std::fill(in.begin() + static_cast<std::ptrdiff_t>(n_), in.end(), 0.0);
        fwd_.execute();
        auto spec = inv_.input();
        const auto X = fwd_.output();
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = std::norm(X[k]);
        inv_.execute();
        const auto r = inv_.output();
        for (std::size_t k = 0; k < lags_; ++k) out[k] = r[k] / static_cast<double>(m);
    }

private:
    std::size_t n_;
    std::size_t lags_;
    RealForward fwd_;
    RealInverse inv_;
};

inline std::vector<double> linear_autocorrelation_sums(std::span<const double> x, std::size_t max_lag) {
    Autocorrelator ac(x.size(), max_lag);
    std::vector<double> r(ac.lags());
    ac.sums(x, r);
    return r;
}

}  // namespace nanonmr::fft
