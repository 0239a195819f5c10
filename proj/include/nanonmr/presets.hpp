// SPDX-License-Identifier: Apache-2.0
//
// Experiment presets. The Qdyne rows are stored in the units of the published
// parameter table; everything in SI is derived from them by the accessors.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/measurement.hpp"

namespace nanonmr {

/// Single-NV correlation-spectroscopy constants (oil immersion).
namespace single_nv {
inline constexpr double kDepth = 2.9e-9;          ///< m
inline constexpr double kT2 = 110e-6;             ///< s
inline constexpr double kT1 = 1.11e-3;            ///< s
inline constexpr double kLarmorHz = 1.9e6;
inline constexpr std::size_t kKdd4Order = 1;      ///< KDD4, 20 pulses
inline constexpr double kAmplitudeA1 = 0.12;
inline constexpr double kCMax = 0.3;
inline constexpr double kDiffusionOil = 5e-13;    ///< m^2/s
}  // namespace single_nv

/// NV-ensemble correlation-spectroscopy constants.
namespace ensemble_nv {
inline constexpr double kDepth = 9e-9;
inline constexpr double kLarmorHz = 3.687e6;
inline constexpr double kTau = 135.6e-9;
inline constexpr std::size_t kKdd4Order = 4;
inline constexpr double kAmplitudeA1Text = 0.008;    ///< value quoted in the appendix text
inline constexpr double kAmplitudeA1Caption = 0.079; ///< value quoted in the figure caption
}  // namespace ensemble_nv

/// Diffusion coefficient of the Fluka oil implied by T_D = 400 us at d = 15.4 nm.
inline constexpr double kDiffusionFluka = 15.4e-9 * 15.4e-9 / 400e-6;

/// B_rms at the single-NV depth, from a1 = c_max Phi_rms^2 under KDD4 (20 pulses) on resonance.
inline double reference_b_rms() {
    const double phi = std::sqrt(single_nv::kAmplitudeA1 / single_nv::kCMax);
    SensorConfig unit;
    unit.B_rms = 1.0;
    unit.omega_L = 2.0 * std::numbers::pi * single_nv::kLarmorHz;
    const auto seq = DDSequence::kdd4(single_nv::kKdd4Order, DDSequence::resonant_tau(unit.omega_L));
    return phi / phi_rms(unit, seq);
}

/// B_rms scaled with depth as d^{-3/2} from the single-NV reference.
inline double b_rms_at_depth(double depth) {
    return reference_b_rms() * std::pow(depth / single_nv::kDepth, -1.5);
}

/// One row of the Qdyne parameter table, in its published units.
struct QdynePreset {
    int index = 0;
    double delta_td_phi = 0.0;   ///< f_delta [Hz] * T_D [s]
    double depth_nm = 0.0;
    double f_larmor_khz = 0.0;
    std::size_t xy8_order = 0;
    double t_qd_us = 0.0;
    double t_tot_h = 0.0;
    std::string sample = "fluka-oil";

    double slice_seconds = 900.0;
    std::size_t group = 20;

    [[nodiscard]] std::string name() const { return "qdyne-" + std::to_string(index); }
    [[nodiscard]] double depth() const { return depth_nm * 1e-9; }
    [[nodiscard]] double larmor_hz() const { return f_larmor_khz * 1e3; }
    [[nodiscard]] double omega_L() const { return 2.0 * std::numbers::pi * larmor_hz(); }
    [[nodiscard]] double sampling_period() const { return t_qd_us * 1e-6; }
    [[nodiscard]] double total_seconds() const { return t_tot_h * 3600.0; }
    [[nodiscard]] double tau() const { return 1.0 / (2.0 * larmor_hz()); }
    [[nodiscard]] DDSequence sequence() const { return DDSequence::xy8(xy8_order, tau()); }

    /// |f_L - m / T_Qd| for the nearest integer m: the beat the sampling grid reports.
    [[nodiscard]] double alias_hz() const {
        const double cycles = larmor_hz() * sampling_period();
        return std::abs(cycles - std::round(cycles)) / sampling_period();
    }

    /// T_D from the depth and the Fluka diffusion coefficient; for the perfluoropolyether
    /// row (unknown D) from the tabulated product and the aliased frequency.
    [[nodiscard]] double diffusion_time() const {
        if (sample == "fluka-oil") return depth() * depth() / kDiffusionFluka;
        return delta_td_phi / alias_hz();
    }
    [[nodiscard]] double delta_hz() const { return delta_td_phi / diffusion_time(); }
    [[nodiscard]] double delta() const { return 2.0 * std::numbers::pi * delta_hz(); }

    /// Frequency search window in Hz.
    [[nodiscard]] std::pair<double, double> search_hz() const {
        if (index == 1) return {200.0, 1800.0};
        return {std::max(1.0, delta_hz() - 800.0), delta_hz() + 800.0};
    }

    [[nodiscard]] double b_rms() const { return b_rms_at_depth(depth()); }

    [[nodiscard]] SensorConfig sensor() const {
        SensorConfig cfg;
        cfg.depth_d = depth();
        cfg.B_rms = b_rms();
        cfg.omega_L = omega_L();
        cfg.eta0 = 0.04;
        cfg.eta1 = 0.03;
        cfg.eta_ref = 0.0;
        return cfg;
    }

    [[nodiscard]] double phi_rms_value() const { return nanonmr::phi_rms(sensor(), sequence()); }

    [[nodiscard]] std::size_t samples_per_slice() const {
        return static_cast<std::size_t>(std::floor(slice_seconds / sampling_period()));
    }
    [[nodiscard]] std::size_t n_slices(double scale = 1.0) const {
        return static_cast<std::size_t>(std::floor(scale * total_seconds() / slice_seconds + 1e-9));
    }
    [[nodiscard]] std::size_t n_groups(double scale = 1.0) const { return n_slices(scale) / group; }

    /// The row as config text, in the key names accepted by apply_overrides.
    [[nodiscard]] std::string config_text() const {
        std::ostringstream os;
        os.precision(17);
        os << "preset = " << name() << "\ndelta_td_phi = " << delta_td_phi << "\ndepth_nm = " << depth_nm
           << "\nf_larmor_khz = " << f_larmor_khz << "\nxy8_order = " << xy8_order << "\nt_qd_us = " << t_qd_us
           << "\nt_tot_h = " << t_tot_h << "\nslice_s = " << slice_seconds << "\ngroup = " << group
           << "\nsample = " << sample << "\n";
        return os.str();
    }

    /// Lags used in fits: up to 25 T_D, and at least three periods of the lowest search frequency.
    [[nodiscard]] std::size_t fit_max_lag() const {
        const double span = std::max(25.0 * diffusion_time(), 3.0 / search_hz().first);
        return static_cast<std::size_t>(std::ceil(span / sampling_period()));
    }
};

inline const std::array<QdynePreset, 6>& qdyne_presets() {
    static const std::array<QdynePreset, 6> table = [] {
        std::array<QdynePreset, 6> t{};
        t[0] = {1, 0.36, 15.4, 2009, 24, 49.740, 90};
        t[1] = {2, 3.00, 15.4, 2010, 22, 45.607, 290};
        t[2] = {3, 4.80, 15.4, 2010, 12, 25.516, 170};
        t[3] = {4, 1.25, 8.0, 2009, 8, 17.524, 50};
        t[4] = {5, 1.59, 8.1, 2009, 8, 17.552, 80};
        t[5] = {6, 16.70, 11.4, 1898, 12, 27.788, 65};
        t[5].sample = "perfluoropolyether";
        return t;
    }();
    return table;
}

inline const QdynePreset& qdyne_preset(std::string_view name) {
    for (const auto& p : qdyne_presets())
        if (p.name() == name) return p;
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

/// Key-value configuration text: `key = value` per line, `#` comments. Units are part
/// of the key names (e.g. `depth_nm`, `t_qd_us`, `f_larmor_khz`).
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
            cfg.values_[key] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in);
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    [[nodiscard]] std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
        return it->second;
    }

    [[nodiscard]] double get_double(const std::string& key) const {
        const std::string s = get_string(key);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
        return v;
    }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Applies recognised keys of a config file on top of a Qdyne preset.
inline QdynePreset apply_overrides(QdynePreset p, const KeyValueConfig& cfg) {
    static const std::vector<std::string> known = {"preset", "delta_td_phi", "depth_nm", "f_larmor_khz", "xy8_order",
                                                   "t_qd_us", "t_tot_h", "slice_s", "group", "sample"};
    for (const auto& [k, v] : cfg.entries()) {
        bool ok = false;
        for (const auto& name : known) ok = ok || name == k;
        if (!ok) throw ConfigError("unknown config key '" + k + "'");
    }
    p.delta_td_phi = cfg.get_double("delta_td_phi", p.delta_td_phi);
    p.depth_nm = cfg.get_double("depth_nm", p.depth_nm);
    p.f_larmor_khz = cfg.get_double("f_larmor_khz", p.f_larmor_khz);
    p.t_qd_us = cfg.get_double("t_qd_us", p.t_qd_us);
    p.t_tot_h = cfg.get_double("t_tot_h", p.t_tot_h);
    p.slice_seconds = cfg.get_double("slice_s", p.slice_seconds);
    if (cfg.has("xy8_order")) p.xy8_order = static_cast<std::size_t>(cfg.get_double("xy8_order"));
    if (cfg.has("group")) p.group = static_cast<std::size_t>(cfg.get_double("group"));
    if (cfg.has("sample")) p.sample = cfg.get_string("sample");
    if (!(p.t_qd_us > 0.0 && p.depth_nm > 0.0 && p.f_larmor_khz > 0.0 && p.t_tot_h > 0.0 && p.slice_seconds > 0.0) ||
        p.xy8_order == 0 || p.group == 0)
        throw ConfigError("preset values must be positive");
    return p;
}

}  // namespace nanonmr
