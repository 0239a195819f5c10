// SPDX-License-Identifier: Apache-2.0
//
// Field-noise generators: Ornstein-Uhlenbeck quadratures, Gaussian-process
// quadratures with the power-law covariance, and a random-walk Monte Carlo of
// statistically polarised dipoles diffusing above the sensor.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/fft.hpp"
#include "nanonmr/parallel.hpp"
#include "nanonmr/random.hpp"

namespace nanonmr {

enum class NoiseModelTag : std::uint32_t { OUExponential = 1, GPPowerLaw = 2, MCDipole = 3, Field = 4 };

inline std::string_view to_string(NoiseModelTag tag) {
    switch (tag) {
        case NoiseModelTag::OUExponential: return "ou-exponential";
        case NoiseModelTag::GPPowerLaw: return "gp-powerlaw";
        case NoiseModelTag::MCDipole: return "mc-dipole";
        case NoiseModelTag::Field: return "field";
    }
    return "unknown";
}

/// Sampled field noise. Quadrature traces fill both `a` and `d`
/// (B(t) = A(t) cos(w_L t) + D(t) sin(w_L t)); plain field traces use `a` only.
struct NoiseTrace {
    std::vector<double> a;
    std::vector<double> d;
    double dt = 1.0;
    std::uint64_t seed = 0;
    NoiseModelTag model = NoiseModelTag::Field;

    [[nodiscard]] std::size_t size() const noexcept { return a.size(); }
    [[nodiscard]] bool is_quadrature() const noexcept { return !d.empty(); }
    [[nodiscard]] double duration() const noexcept { return dt * static_cast<double>(a.size()); }
};

namespace detail {
inline void require_fine_step(double dt, double T_D, std::string_view who) {
    if (!(dt > 0.0) || !(T_D > 0.0)) throw DomainError(std::string(who) + ": dt and T_D must be positive");
    if (!(dt < T_D / 10.0))
        throw DomainError(std::string(who) + ": dt must be < T_D/10 (dt=" + std::to_string(dt) +
                          ", T_D=" + std::to_string(T_D) + ")");
}
}  // namespace detail

namespace detail {

/// Exact AR(1) update of two independent OU quadratures; valid for any dt.
inline NoiseTrace exact_ou_quadratures(double B_rms, double T_D, std::size_t n, double dt, std::uint64_t seed,
                                       std::string_view stream) {
    NoiseTrace trace;
    trace.dt = dt;
    trace.seed = seed;
    trace.model = NoiseModelTag::OUExponential;
    const double rho = std::exp(-dt / T_D);
    const double kick = B_rms * std::sqrt(-std::expm1(-2.0 * dt / T_D));
    const SeedTree tree(seed);
    auto run = [&](std::vector<double>& out, std::uint64_t index) {
        RandomStream rng = tree.stream(stream, index);
        out.resize(n);
        if (n == 0) return;
        double x = B_rms * rng.normal();
        out[0] = x;
        for (std::size_t k = 1; k < n; ++k) {
            x = x * rho + kick * rng.normal();
            out[k] = x;
        }
    };
    run(trace.a, 0);
    run(trace.d, 1);
    return trace;
}

}  // namespace detail

/// Two independent OU processes with stationary std B_rms and correlation time T_D,
/// advanced with the exact discrete update.
inline NoiseTrace generate_ou_quadratures(double B_rms, double T_D, std::size_t n, double dt, std::uint64_t seed) {
    detail::require_fine_step(dt, T_D, "generate_ou_quadratures");
    return detail::exact_ou_quadratures(B_rms, T_D, n, dt, seed, "ou-quadrature");
}

/// Diagnostics of a circulant embedding.
struct EmbeddingReport {
    std::size_t embedding_size = 0;
    double clipped_mass = 0.0;  ///< sum of clipped negative eigenvalues / sum |eigenvalues|
    std::size_t n_clipped = 0;
};

namespace detail {

/// Circulant-embedding draw of two independent stationary quadratures with
/// autocovariance B_rms^2 G(t/T_D) on the grid k dt. No restriction on dt / T_D:
/// a coarse grid gives exact samples of the process at the grid points.
inline NoiseTrace circulant_powerlaw_quadratures(double B_rms, double T_D, std::size_t n, double dt,
                                                 std::uint64_t seed, std::string_view stream,
                                                 EmbeddingReport* report = nullptr) {
    if (n < 2) throw DataError("generate_powerlaw_gp: need at least two samples");
    const std::size_t m = fft::good_size(2 * (n - 1));
    const std::size_t half = m / 2;

    std::vector<double> lambda(m / 2 + 1);
    {
        fft::RealForward fwd(m);
        auto row = fwd.input();
        const double var = B_rms * B_rms;
        for (std::size_t j = 0; j <= half; ++j) {
            const double c = (j == 0) ? var : var * powerlaw_envelope(static_cast<double>(j) * dt / T_D);
            row[j] = c;
            if (j != 0 && m - j != j) row[m - j] = c;
        }
        fwd.execute();
        const auto spec = fwd.output();
        for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] = spec[k].real();
    }

    const double lambda_max = *std::max_element(lambda.begin(), lambda.end());
    double negative = 0.0, total = 0.0;
    std::size_t n_clipped = 0;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const double weight = (k == 0 || 2 * k == m) ? 1.0 : 2.0;  // mirrored bins
        total += weight * std::abs(lambda[k]);
        if (lambda[k] < 0.0) {
            if (lambda[k] < -1e-10 * lambda_max) {
                negative += weight * -lambda[k];
                n_clipped += 1;
            }
            lambda[k] = 0.0;
        }
    }
    const double clipped_mass = total > 0.0 ? negative / total : 0.0;
    if (report) *report = {m, clipped_mass, n_clipped};
    if (clipped_mass > 1e-3)
        throw DataError("generate_powerlaw_gp: circulant embedding clipped " + std::to_string(clipped_mass) +
                        " of the spectral mass; covariance not achievable at this n, dt");

    fft::Complex transform(m, FFTW_FORWARD);
    auto z = transform.data();
    RandomStream rng = SeedTree(seed).stream(stream, 0);
    const double norm = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t fold = k <= half ? k : m - k;
        const double amp = std::sqrt(lambda[fold] * norm);
        const double re = rng.normal();
        const double im = rng.normal();
        z[k] = {amp * re, amp * im};
    }
    transform.execute();

    NoiseTrace trace;
    trace.dt = dt;
    trace.seed = seed;
    trace.model = NoiseModelTag::GPPowerLaw;
    trace.a.resize(n);
    trace.d.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        trace.a[k] = z[k].real();
        trace.d[k] = z[k].imag();
    }
    return trace;
}

}  // namespace detail

/// Stationary Gaussian quadratures with autocovariance B_rms^2 G(t/T_D), by circulant
/// embedding. The real and imaginary parts of one complex coloured draw give the two
/// independent quadratures.
inline NoiseTrace generate_powerlaw_gp(double B_rms, double T_D, std::size_t n, double dt, std::uint64_t seed,
                                       EmbeddingReport* report = nullptr) {
    detail::require_fine_step(dt, T_D, "generate_powerlaw_gp");
    return detail::circulant_powerlaw_quadratures(B_rms, T_D, n, dt, seed, "gp-powerlaw", report);
}

/// Lab-frame field B(t) = A(t) cos(w_L t) + D(t) sin(w_L t) from a quadrature trace.
inline NoiseTrace compose_field(const NoiseTrace& quadratures, double omega_L) {
    if (!quadratures.is_quadrature()) throw DataError("compose_field: trace has no D quadrature");
    NoiseTrace out;
    out.dt = quadratures.dt;
    out.seed = quadratures.seed;
    out.model = NoiseModelTag::Field;
    out.a.resize(quadratures.size());
    for (std::size_t k = 0; k < out.a.size(); ++k) {
        const double phase = omega_L * quadratures.dt * static_cast<double>(k);
        out.a[k] = quadratures.a[k] * std::cos(phase) + quadratures.d[k] * std::sin(phase);
    }
    return out;
}

/// (1 + 6 D t / d^2)^{-3/2}, the second-moment heuristic for the dipolar correlation.
inline double heuristic_correlation(double t, double d, double D) {
    if (!(t >= 0.0)) throw DomainError("heuristic_correlation: t must be >= 0");
    return std::pow(1.0 + 6.0 * D * t / (d * d), -1.5);
}

/// Per-spin field kernel in the Monte Carlo.
enum class DipoleKernel {
    Dipolar,  ///< (3 cos^2 theta - 1) / r^3 with the sensing axis normal to the surface
    Scalar,   ///< 1 / r^3, no angular factor
};

/// Ideal-gas diffusion above a planar surface. The sensor sits at depth d below
/// the surface z = 0; spins live in 0 < z < Lz, periodic in x and y.
struct DiffusionScene {
    double depth_d = 5e-9;
    double diff_coeff_D = 5e-13;
    std::size_t n_particles = 10000;
    double Lx = 0.0, Ly = 0.0, Lz = 0.0;  ///< zero means 40 d, 40 d, 20 d
    double moment_density = 1.0;
    double dt = 0.0;                      ///< zero means T_D / 100
    std::uint64_t seed = 1;
    DipoleKernel kernel = DipoleKernel::Dipolar;

    [[nodiscard]] double diffusion_time() const { return depth_d * depth_d / diff_coeff_D; }

    /// Fills defaulted fields and checks invariants.
    [[nodiscard]] DiffusionScene resolved() const {
        DiffusionScene s = *this;
        if (!(s.depth_d > 0.0) || !(s.diff_coeff_D > 0.0)) throw ConfigError("DiffusionScene: d and D must be > 0");
        if (s.n_particles == 0) throw ConfigError("DiffusionScene: need at least one particle");
        if (s.Lx == 0.0) s.Lx = 40.0 * s.depth_d;
        if (s.Ly == 0.0) s.Ly = 40.0 * s.depth_d;
        if (s.Lz == 0.0) s.Lz = 20.0 * s.depth_d;
        if (s.dt == 0.0) s.dt = s.diffusion_time() / 100.0;
        if (!(s.Lz > 2.0 * s.depth_d)) throw ConfigError("DiffusionScene: Lz must be much larger than d");
        if (!(s.diffusion_time() > 10.0 * s.dt)) throw ConfigError("DiffusionScene: need T_D > 10 dt");
        return s;
    }

    /// Same geometry with lengths scaled by s and D by s^2; T_D and dt are unchanged.
    [[nodiscard]] DiffusionScene rescaled(double s) const {
        DiffusionScene out = resolved();
        out.depth_d *= s;
        out.diff_coeff_D *= s * s;
        out.Lx *= s;
        out.Ly *= s;
        out.Lz *= s;
        return out;
    }
};

/// How the Monte Carlo turns trajectories into a correlation estimate.
enum class McEstimator {
    /// Average over moment assignments, taken analytically: sum over particles of each
    /// particle's own field autocorrelation. Cross terms between particles vanish in
    /// expectation and are never formed.
    SelfTerm,
    /// One draw of +-1 moments; the autocorrelation of the summed field B(t).
    Field,
};

struct MonteCarloOptions {
    std::size_t max_lag = 0;      ///< zero means min(n_steps/4, 50 T_D)
    McEstimator estimator = McEstimator::SelfTerm;
    std::size_t n_chunks = 16;    ///< fixed particle partition; independent of thread count
};

/// Random-walk Monte Carlo of the normalised field autocorrelation at the sensor.
inline AutoCorrelation mc_dipole_correlation(const DiffusionScene& scene_in, std::size_t n_steps,
                                             MonteCarloOptions options = {}) {
    const DiffusionScene scene = scene_in.resolved();
    const double T_D = scene.diffusion_time();
    std::size_t max_lag = options.max_lag;
    if (max_lag == 0)
        max_lag = std::min<std::size_t>(n_steps / 4, static_cast<std::size_t>(std::ceil(50.0 * T_D / scene.dt)));
    if (2 * max_lag >= n_steps) throw ConfigError("mc_dipole_correlation: need n_steps > 2 max_lag");
    const bool self_term = options.estimator == McEstimator::SelfTerm;
    const std::size_t chunks = std::min(std::max<std::size_t>(1, options.n_chunks), scene.n_particles);

    const double d = scene.depth_d;
    const double sigma = std::sqrt(2.0 * scene.diff_coeff_D * scene.dt);
    const double r_min = 0.05 * d;
    const double half_x = 0.5 * scene.Lx, half_y = 0.5 * scene.Ly;
    const SeedTree tree(scene.seed);

    struct ChunkResult {
        std::vector<double> field;     // Field: summed m_i f_i(t)
        std::vector<double> lag_sums;  // SelfTerm: sum_i sum_t f_i(t) f_i(t+k)
        double f_sum = 0.0;            // SelfTerm: sum_i sum_t f_i(t)
    };
    std::vector<ChunkResult> partial(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        ChunkResult& out = partial[c];
        std::vector<double> f(n_steps);
        std::vector<double> r;
        std::optional<fft::Autocorrelator> corr;
        if (self_term) {
            corr.emplace(n_steps, max_lag + 1);
            out.lag_sums.assign(max_lag + 1, 0.0);
            r.resize(max_lag + 1);
        } else {
            out.field.assign(n_steps, 0.0);
        }
        const std::size_t first = c * scene.n_particles / chunks;
        const std::size_t last = (c + 1) * scene.n_particles / chunks;
        for (std::size_t p = first; p < last; ++p) {
            RandomStream rng = tree.stream("mc-particle", p);
            const double moment = rng.bernoulli(0.5) ? scene.moment_density : -scene.moment_density;
            double x, y, z;
            for (;;) {
                x = rng.uniform(-half_x, half_x);
                y = rng.uniform(-half_y, half_y);
                z = rng.uniform(0.0, scene.Lz);
                const double zz = z + d;
                if (x * x + y * y + zz * zz >= r_min * r_min) break;
            }
            for (std::size_t t = 0; t < n_steps; ++t) {
                const double zz = z + d;
                const double r2 = x * x + y * y + zz * zz;
                const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
                f[t] = scene.kernel == DipoleKernel::Dipolar ? (3.0 * zz * zz / r2 - 1.0) * inv_r3 : inv_r3;

                x += sigma * rng.normal();
                y += sigma * rng.normal();
                z += sigma * rng.normal();
                if (x >= half_x) x -= scene.Lx; else if (x < -half_x) x += scene.Lx;
                if (y >= half_y) y -= scene.Ly; else if (y < -half_y) y += scene.Ly;
                if (z < 0.0) z = -z;
                if (z > scene.Lz) z = 2.0 * scene.Lz - z;
            }
            if (self_term) {
                corr->sums(f, r);
                for (std::size_t k = 0; k <= max_lag; ++k) out.lag_sums[k] += r[k];
                for (double v : f) out.f_sum += v;
            } else {
                for (std::size_t t = 0; t < n_steps; ++t) out.field[t] += moment * f[t];
            }
        }
    });

    AutoCorrelation result;
    if (self_term) {
        std::vector<double> sums(max_lag + 1, 0.0);
        double f_sum = 0.0;
        for (const auto& part : partial) {
            for (std::size_t k = 0; k <= max_lag; ++k) sums[k] += part.lag_sums[k];
            f_sum += part.f_sum;
        }
        // Long-lag limit of the single-particle products: N * (mean f)^2.
        const double n = static_cast<double>(n_steps);
        const double mean_f = f_sum / (n * static_cast<double>(scene.n_particles));
        const double floor = static_cast<double>(scene.n_particles) * mean_f * mean_f;
        result.dt = scene.dt;
        for (std::size_t k = 0; k <= max_lag; ++k) {
            result.lags.push_back(static_cast<double>(k) * scene.dt);
            result.values.push_back(sums[k] / (n - static_cast<double>(k)) - floor);
            result.counts.push_back((n_steps - k) * scene.n_particles);
        }
    } else {
        std::vector<double> field(n_steps, 0.0);
        for (const auto& part : partial)
            for (std::size_t t = 0; t < n_steps; ++t) field[t] += part.field[t];
        result = autocorrelate(field, max_lag, scene.dt);
    }
    const double c0 = result.values[0];
    if (!(c0 > 0.0)) throw DataError("mc_dipole_correlation: zero field variance");
    for (double& v : result.values) v /= c0;
    result.source_meta = std::string("mc-dipole;kernel=") +
                         (scene.kernel == DipoleKernel::Dipolar ? "dipolar" : "scalar") +
                         ";estimator=" + (self_term ? "self-term" : "field") +
                         ";particles=" + std::to_string(scene.n_particles) + ";steps=" + std::to_string(n_steps) +
                         ";T_D=" + std::to_string(T_D);
    return result;
}

}  // namespace nanonmr
