// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. Every stream is a pure function of
// (root seed, stream name, index), so the numbers a work item sees do not
// depend on which thread runs it or in what order.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>

namespace nanonmr {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

}  // namespace detail

/// Philox-backed stream satisfying UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream() = default;
    RandomStream(std::uint64_t key, std::uint64_t stream_id) noexcept : key_(key), stream_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (buffered_ == 0) refill();
        return buffer_[--buffered_];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal by Box-Muller; both variates of each pair are used.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Poisson variate; inversion for small means, which is all the readout model needs.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 30.0) {
            const double u = uniform();
            double p = std::exp(-mean);
            double cdf = p;
            std::uint64_t k = 0;
            while (u > cdf && k < 1000) {
                ++k;
                p *= mean / static_cast<double>(k);
                cdf += p;
            }
            return k;
        }
        std::poisson_distribution<std::uint64_t> dist(mean);
        return dist(*this);
    }

    [[nodiscard]] std::uint64_t blocks_drawn() const noexcept { return counter_; }

private:
    void refill() noexcept {
        const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                               static_cast<std::uint32_t>(counter_ >> 32),
                                               static_cast<std::uint32_t>(stream_),
                                               static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(key_),
                                               static_cast<std::uint32_t>(key_ >> 32)};
        const auto out = detail::philox4x32(ctr, key);
        buffer_[1] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buffer_[0] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        buffered_ = 2;
        ++counter_;
    }

    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Root of a seed hierarchy. Named substreams ("noise", "photon", "restarts")
/// are independent of each other and of their indices.
class SeedTree {
public:
    explicit SeedTree(std::uint64_t root_seed) noexcept : root_(root_seed) {}

    [[nodiscard]] std::uint64_t root() const noexcept { return root_; }

    [[nodiscard]] RandomStream stream(std::string_view name, std::uint64_t index = 0) const noexcept {
        return RandomStream(detail::splitmix64(root_ ^ detail::fnv1a(name)), index);
    }

    /// A child tree, for nesting (e.g. one tree per ensemble repetition).
    [[nodiscard]] SeedTree child(std::string_view name, std::uint64_t index = 0) const noexcept {
        return SeedTree(detail::splitmix64(detail::splitmix64(root_ ^ detail::fnv1a(name)) + index));
    }

private:
    std::uint64_t root_;
};

}  // namespace nanonmr
