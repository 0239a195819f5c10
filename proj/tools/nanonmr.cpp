// SPDX-License-Identifier: Apache-2.0
//
// nanonmr command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 statistical-quality flag.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nanonmr/nanonmr.hpp"

namespace fs = std::filesystem;
using namespace nanonmr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitStatistical = 4;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path prepare_out_dir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + out + "'");
    return dir;
}

std::map<std::string, std::string> parse_meta(const std::string& meta) {
    std::map<std::string, std::string> out;
    std::istringstream in(meta);
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto eq = item.find('=');
        if (eq != std::string::npos) out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("trace metadata lacks '" + key + "'");
    return std::stod(it->second);
}

QdynePreset load_preset(const std::string& name, const std::string& config_path) {
    if (config_path.empty()) return qdyne_preset(name);
    const auto cfg = KeyValueConfig::load(config_path);
    const std::string base = cfg.has("preset") ? cfg.get_string("preset") : name;
    return apply_overrides(qdyne_preset(base), cfg);
}

struct Common {
    std::uint64_t seed = 1;
    std::string out = "nanonmr-out";
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Root seed")->capture_default_str();
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads (NANONMR_THREADS overrides)");
}

RunManifest start_manifest(const std::string& command, const std::string& params, std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.preset_hash = content_hash(params);
    m.seed = seed;
    m.tool_version = NANONMR_VERSION;
    m.started_utc = utc_now();
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& dir, const std::vector<fs::path>& files) {
    for (const auto& f : files) m.add_output(f);
    m.finished_utc = utc_now();
    m.report().save(dir / "manifest.txt");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string preset = "qdyne-1";
    std::string config;
    double scale = 0.01;
    std::string model = "powerlaw";
    std::string level = "photon";
    double noise_scale = 1.0;
    bool csv = false;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
    const QdynePreset p = load_preset(a.preset, a.config);
    const EnvelopeKind kind = parse_envelope_kind(a.model);
    if (kind == EnvelopeKind::Mixed) throw ConfigError("simulate: --model must be powerlaw or exponential");
    if (!(a.scale > 0.0)) throw ConfigError("--scale must be > 0");
    const auto dir = prepare_out_dir(c.out);
    auto geom = QdyneGeometry::from_preset(p);

    TraceFile t;
    t.dt = geom.dt;
    t.seed = c.seed;
    t.model_tag = static_cast<std::uint32_t>(kind == EnvelopeKind::PowerLaw ? NoiseModelTag::GPPowerLaw
                                                                             : NoiseModelTag::OUExponential);
    t.samples_per_slice = geom.samples_per_slice;
    t.max_lag = geom.max_lag;
    const auto [lo, hi] = p.search_hz();
    std::ostringstream meta;
    meta.precision(17);
    meta << "preset=" << p.name() << ";model=" << to_string(kind) << ";level=" << a.level << ";scale=" << a.scale
         << ";f_lo=" << lo << ";f_hi=" << hi << ";reference=" << p.delta_hz() << ";T_D=" << geom.T_D;

    if (a.level == "photon") {
        const std::size_t slices = p.n_slices(a.scale);
        if (slices == 0) throw ConfigError("--scale leaves no complete slice");
        t.content = TraceContent::PhotonCounts;
        t.group = p.group;
        t.values = simulate_qdyne_counts(geom, kind, slices, c.seed);
    } else if (a.level == "correlation") {
        const auto [n_groups, group] = scaled_grouping(p, a.scale);
        geom.group = group;
        geom.noise_scale = a.noise_scale;
        meta << ";noise_scale=" << a.noise_scale;
        t.content = TraceContent::GroupCorrelations;
        t.group = group;
        for (const auto& g : matched_snr_groups(geom, kind, n_groups, c.seed))
            t.values.insert(t.values.end(), g.values.begin(), g.values.end());
    } else {
        throw ConfigError("--level must be photon or correlation");
    }
    t.meta = meta.str();
    const auto trace_path = dir / "trace.bin";
    write_trace(trace_path, t);
    std::vector<fs::path> outputs{trace_path};
    if (a.csv) {
        outputs.push_back(dir / "trace.csv");
        to_csv(t).save(outputs.back());
    }

    auto manifest = start_manifest("simulate", p.config_text() + t.meta, c.seed);
    finish_manifest(manifest, dir, outputs);
    std::cout << "wrote " << trace_path.string() << " (" << t.values.size() << " values)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string trace;
    std::vector<double> window;
    std::optional<double> reference;
    std::size_t restarts = 500;
    bool fix_phase = true;
    std::optional<double> fix_amplitude;
    bool detrend = false;
    bool no_global = false;
    bool no_local = false;
};

void write_estimators(const fs::path& path, const GroupAnalysis& r) {
    CsvWriter csv({"group", "model", "mode", "delta_hz", "T_D_s", "a1", "r_squared"});
    auto rows = [&](const ModelEstimates& m, const std::vector<FitResult>& fits, const char* mode) {
        for (std::size_t g = 0; g < fits.size(); ++g) {
            const auto& f = fits[g];
            csv.add_row({std::to_string(g), std::string(to_string(m.kind)), mode,
                         format_number(f.params.delta / (2.0 * std::numbers::pi)),
                         format_number(f.params.envelope.diffusion_time()), format_number(f.params.a1),
                         format_number(f.r_squared)});
        }
    };
    for (const auto* m : {&r.powerlaw, &r.exponential}) {
        rows(*m, m->global, "global");
        rows(*m, m->local, "local");
    }
    csv.save(path);
}

void add_stats(Report& rep, const std::string& prefix, const std::optional<HistogramStats>& s) {
    if (!s) return;
    rep.add(prefix + "_rmse_hz", s->rmse).add(prefix + "_mean_hz", s->mean).add(prefix + "_std_hz", s->std);
}

int cmd_analyze(const Common& c, const AnalyzeArgs& a) {
    const TraceFile t = read_trace(a.trace);
    const auto meta = parse_meta(t.meta);
    const auto dir = prepare_out_dir(c.out);

    AnalysisSettings s;
    s.seed = c.seed;
    s.n_restarts = a.restarts;
    s.fix_phase = a.fix_phase;
    s.fixed_a1 = a.fix_amplitude;
    s.detrend = a.detrend;
    s.run_global = !a.no_global;
    s.run_local = !a.no_local;
    if (a.window.empty()) {
        s.f_lo_hz = meta_double(meta, "f_lo");
        s.f_hi_hz = meta_double(meta, "f_hi");
    } else {
        if (a.window.size() != 2) throw ConfigError("--window takes two values: lo hi (Hz)");
        s.f_lo_hz = a.window[0];
        s.f_hi_hz = a.window[1];
    }
    s.reference_hz = a.reference ? *a.reference : meta_double(meta, "reference");

    std::vector<AutoCorrelation> groups;
    if (t.content == TraceContent::PhotonCounts) {
        if (t.values.size() < t.samples_per_slice) throw DataError("analyze: trace shorter than one slice");
        groups = groups_from_counts(t.values, t.samples_per_slice, t.group, t.max_lag, t.dt);
    } else {
        groups = trace_groups(t);
    }
    const GroupAnalysis r = analyze_groups(groups, s);

    // Correlation and model curves (fits of the combined record).
    const auto bounds = default_bounds(r.total, s.f_lo_hz, s.f_hi_hz);
    FixedMask fixed{};
    fixed[kPhi] = s.fix_phase;
    fixed[kA1] = s.fixed_a1.has_value();
    SignalModelParams fv;
    fv.a1 = s.fixed_a1.value_or(0.0);
    std::vector<FitResult> total_fits;
    for (auto kind : {EnvelopeKind::PowerLaw, EnvelopeKind::Exponential}) {
        fv.envelope = EnvelopeModel::make(kind, 0.5 * (bounds.lo[kTD] + bounds.hi[kTD]));
        total_fits.push_back(global_fit(r.total, kind, bounds, fixed, fv, s.n_restarts, SeedTree(c.seed).child("total").root()));
    }
    CsvWriter corr({"lag_s", "correlation", "fit_powerlaw", "fit_exponential"});
    for (std::size_t k = 0; k < r.total.size(); ++k) {
        const double tk = r.total.lags[k];
        corr.add_row(std::vector<double>{tk, r.total.values[k], signal_model(tk, total_fits[0].params),
                                         signal_model(tk, total_fits[1].params)});
    }
    CsvWriter fft({"freq_hz", "magnitude"});
    for (std::size_t i = 0; i < r.total_spectrum.freqs.size(); ++i)
        fft.add_row(std::vector<double>{r.total_spectrum.freqs[i], r.total_spectrum.magnitudes[i]});
    CsvWriter ratio({"quantity", "value"});
    if (r.ratio_global) ratio.add_row({"ratio_global", format_number(*r.ratio_global)});
    if (r.ratio_local) ratio.add_row({"ratio_local", format_number(*r.ratio_local)});
    ratio.add_row({"flat_limit_hz", format_number(r.flat_limit_hz)});

    const std::vector<fs::path> files = {dir / "correlation.csv", dir / "fft_spectrum.csv", dir / "estimators.csv",
                                         dir / "rmse_ratio.csv", dir / "detrend.csv", dir / "analysis_report.txt"};
    corr.save(files[0]);
    fft.save(files[1]);
    write_estimators(files[2], r);
    ratio.save(files[3]);
    CsvWriter det({"lag_s", "before", "removed", "after"});
    if (r.detrend && r.detrend->applied) {
        for (std::size_t k = 0; k < r.total.size(); ++k)
            det.add_row(std::vector<double>{r.total.lags[k], r.total.values[k] + r.detrend->removed[k],
                                            r.detrend->removed[k], r.total.values[k]});
    }
    det.save(files[4]);

    Report rep("analyze");
    rep.add("trace", fs::path(a.trace).filename().string()).add("trace_meta", t.meta);
    rep.add("n_groups", groups.size()).add("f_lo_hz", s.f_lo_hz).add("f_hi_hz", s.f_hi_hz);
    rep.add("reference_hz", s.reference_hz).add("fix_phase", s.fix_phase).add("restarts", s.n_restarts);
    rep.add("detrend_applied", r.detrend.has_value() && r.detrend->applied);
    rep.add("fft_peak_hz", r.total_spectrum.peak_freq ? format_number(*r.total_spectrum.peak_freq) : "none");
    add_stats(rep, "powerlaw_global", r.powerlaw.global_stats);
    add_stats(rep, "exponential_global", r.exponential.global_stats);
    add_stats(rep, "powerlaw_local", r.powerlaw.local_stats);
    add_stats(rep, "exponential_local", r.exponential.local_stats);
    if (r.ratio_global) rep.add("ratio_global", *r.ratio_global);
    if (r.ratio_local) rep.add("ratio_local", *r.ratio_local);
    rep.add("flat_limit_hz", r.flat_limit_hz);
    rep.add("total_r2_powerlaw", total_fits[0].r_squared).add("total_r2_exponential", total_fits[1].r_squared);
    const bool flagged = !r.total_spectrum.has_peak();
    rep.add("statistical_flag", flagged ? std::string("no spectral peak in the search window") : std::string("none"));
    rep.save(files[5]);

    auto manifest = start_manifest("analyze", t.meta + rep.str(), c.seed);
    finish_manifest(manifest, dir, files);
    std::cout << rep.str();
    return flagged ? kExitStatistical : kExitOk;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
    double T_D = 400e-6;
    double te_factor = 50.0;
    double lo = 1e-3, hi = 100.0;
    std::size_t per_decade = 40;
};

int cmd_spectrum(const Common& c, const SpectrumArgs& a) {
    if (a.per_decade < 25) throw ConfigError("--per-decade must be >= 25 to resolve the spectra");
    const auto dir = prepare_out_dir(c.out);
    const double omega_D = 2.0 * std::numbers::pi / a.T_D;
    const auto n = static_cast<std::size_t>(std::ceil(std::log10(a.hi / a.lo) * static_cast<double>(a.per_decade))) + 1;
    const auto grid = log_frequency_grid(omega_D, a.lo, a.hi, n);
    const auto e = numeric_spectrum(EnvelopeModel::exponential(a.T_D), 0.0, grid);
    const auto p = numeric_spectrum(EnvelopeModel::power_law(a.T_D), 0.0, grid);
    const auto m = numeric_spectrum(EnvelopeModel::mixed(a.T_D, a.te_factor * a.T_D), 0.0, grid);
    CsvWriter csv({"omega_over_omegaD", "S_exp", "S_pl", "S_mixed"});
    for (std::size_t i = 0; i < grid.size(); ++i)
        csv.add_row(std::vector<double>{grid[i] / omega_D, e.values[i], p.values[i], m.values[i]});

    Report rep("spectrum");
    rep.add("T_D_s", a.T_D).add("T_E_over_T_D", a.te_factor).add("omega_D_rad_s", omega_D).add("points", grid.size());
    rep.add("units", "S in seconds; one-sided, S(omega) = 2 int_0^inf cos(omega t) C(t) dt");
    if (a.hi >= 100.0) rep.add("powerlaw_slope_10_100", loglog_slope(p, 10.0 * omega_D, 100.0 * omega_D));
    if (a.lo <= 1e-3 && a.hi >= 5e-2) {
        rep.add("cusp_exponent_powerlaw", fit_small_omega_cusp(p).exponent);
        rep.add("cusp_exponent_exponential", fit_small_omega_cusp(e).exponent);
        rep.add("cusp_exponent_mixed", fit_small_omega_cusp(m).exponent);
    }
    rep.add("parseval_exponential", spectral_integral(e) / std::numbers::pi);
    rep.add("parseval_powerlaw", spectral_integral(p) / std::numbers::pi);

    const std::vector<fs::path> files = {dir / "spectrum.csv", dir / "spectrum_report.txt"};
    csv.save(files[0]);
    rep.save(files[1]);
    auto manifest = start_manifest("spectrum", rep.str(), c.seed);
    finish_manifest(manifest, dir, files);
    std::cout << rep.str();
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct McArgs {
    std::size_t particles = 10000;
    std::size_t steps = 200000;
    double depth = 5e-9;
    double diffusion = 5e-13;
    double rescale = 1.0;
    std::string estimator = "self-term";
    std::string kernel = "dipolar";
};

int cmd_mc_oracle(const Common& c, const McArgs& a) {
    const auto dir = prepare_out_dir(c.out);
    DiffusionScene scene;
    scene.depth_d = a.depth;
    scene.diff_coeff_D = a.diffusion;
    scene.n_particles = a.particles;
    scene.seed = c.seed;
    if (a.kernel == "dipolar") scene.kernel = DipoleKernel::Dipolar;
    else if (a.kernel == "scalar") scene.kernel = DipoleKernel::Scalar;
    else throw ConfigError("--kernel must be dipolar or scalar");
    MonteCarloOptions opt;
    if (a.estimator == "self-term") opt.estimator = McEstimator::SelfTerm;
    else if (a.estimator == "field") opt.estimator = McEstimator::Field;
    else throw ConfigError("--estimator must be self-term or field");
    if (a.rescale != 1.0) scene = scene.rescaled(a.rescale);

    const auto ac = mc_dipole_correlation(scene, a.steps, opt);
    const double T_D = scene.diffusion_time();
    const auto tail = analyze_correlation_tail(ac, T_D);

    CsvWriter csv({"t_over_TD", "correlation", "heuristic", "powerlaw_envelope", "exponential_envelope"});
    const auto powerlaw = EnvelopeModel::power_law(1.0);
    for (std::size_t k = 0; k < ac.size(); ++k) {
        const double z = ac.lags[k] / T_D;
        csv.add_row(std::vector<double>{z, ac.values[k], heuristic_correlation(ac.lags[k], scene.depth_d, scene.diff_coeff_D),
                                        powerlaw(z), std::exp(-z)});
    }
    Report rep("mc-oracle");
    rep.add("particles", a.particles).add("steps", a.steps).add("depth_m", scene.depth_d).add("diffusion_m2_s", scene.diff_coeff_D);
    rep.add("T_D_s", T_D).add("dt_s", ac.dt).add("estimator", a.estimator).add("kernel", a.kernel);
    rep.add("short_time_over_T_D", tail.short_time / T_D).add("short_time_se_over_T_D", tail.short_time_se / T_D);
    rep.add("short_time_max_rel_dev", tail.short_max_rel_dev);
    rep.add("tail_slope", tail.slope).add("tail_slope_se", tail.slope_se);
    rep.add("tail_slope_ci95_lo", tail.slope_ci_lo).add("tail_slope_ci95_hi", tail.slope_ci_hi);
    rep.add("tail_bins", tail.tail_bins).add("tail_bins_dropped", tail.tail_bins_dropped);
    rep.add("heuristic_max_rel_dev", tail.heuristic_max_rel_dev);
    rep.add("insufficient_statistics", tail.insufficient_statistics);
    if (tail.insufficient_statistics) rep.add("flag_reason", tail.flag_reason);

    const std::vector<fs::path> files = {dir / "mc_correlation.csv", dir / "mc_report.txt"};
    csv.save(files[0]);
    rep.save(files[1]);
    auto manifest = start_manifest("mc-oracle", rep.str(), c.seed);
    finish_manifest(manifest, dir, files);
    std::cout << rep.str();
    return tail.insufficient_statistics ? kExitStatistical : kExitOk;
}

// ---------------------------------------------------------------------------

struct SensitivityArgs {
    double T_D = 400e-6;
    double t_tot_factor = 1e4;
    double te_factor = 50.0;
    double lo = 0.02, hi = 0.5;
    std::size_t points = 13;
};

int cmd_sensitivity(const Common& c, const SensitivityArgs& a) {
    if (a.points < 3 || !(a.hi > a.lo && a.lo > 0.0)) throw ConfigError("sensitivity: need 0 < lo < hi and >= 3 points");
    const auto dir = prepare_out_dir(c.out);
    const double T_tot = a.t_tot_factor * a.T_D, T_E = a.te_factor * a.T_D;
    CsvWriter csv({"delta_TD", "cs_closed", "cs_numeric", "qdyne_closed", "qdyne_numeric", "mixed_derived", "mixed_printed"});
    std::vector<double> lx, lcs, lqd;
    for (std::size_t i = 0; i < a.points; ++i) {
        const double x = a.lo * std::pow(a.hi / a.lo, static_cast<double>(i) / static_cast<double>(a.points - 1));
        const double delta = x / a.T_D;
        const auto cs = sensitivity_report(Protocol::CS, delta, a.T_D, T_tot, a.T_D / 4);
        const auto qd = sensitivity_report(Protocol::Qdyne, delta, a.T_D, T_tot, a.T_D / 4);
        csv.add_row(std::vector<double>{x, cs.ratio_closed_form, cs.numeric_ratio(), qd.ratio_closed_form, qd.numeric_ratio(),
                                        sensitivity_ratio_mixed(delta, T_E, T_tot), sensitivity_ratio_mixed_printed(delta, T_E, T_tot)});
        lx.push_back(std::log(x));
        lcs.push_back(std::log(cs.numeric_ratio()));
        lqd.push_back(std::log(qd.numeric_ratio() / std::log(delta * T_tot)));
    }
    auto slope = [&](const std::vector<double>& y) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += y[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (y[i] - my);
        }
        return sxy / sxx;
    };
    Report rep("sensitivity");
    rep.add("T_D_s", a.T_D).add("T_tot_s", T_tot).add("T_E_s", T_E).add("points", a.points);
    rep.add("cs_sampling", "t_k = k T_D/4 up to T_tot, sigma_k^2 proportional to t_k");
    rep.add("qdyne_sampling", "lags k T_D/4 up to T_tot, constant sigma per lag");
    rep.add("cs_numeric_slope", slope(lcs)).add("qdyne_numeric_slope_over_log", slope(lqd));
    const std::vector<fs::path> files = {dir / "sensitivity.csv", dir / "sensitivity_report.txt"};
    csv.save(files[0]);
    rep.save(files[1]);
    auto manifest = start_manifest("sensitivity", rep.str(), c.seed);
    finish_manifest(manifest, dir, files);
    std::cout << rep.str();
    return kExitOk;
}

int cmd_preset_list() {
    CsvWriter csv({"name", "delta_td_phi", "depth_nm", "f_larmor_khz", "xy8_order", "t_qd_us", "t_tot_h", "sample",
                   "T_D_us", "delta_hz", "phi_rms", "f_lo_hz", "f_hi_hz"});
    for (const auto& p : qdyne_presets()) {
        const auto [lo, hi] = p.search_hz();
        csv.add_row({p.name(), format_number(p.delta_td_phi), format_number(p.depth_nm), format_number(p.f_larmor_khz),
                     std::to_string(p.xy8_order), format_number(p.t_qd_us), format_number(p.t_tot_h), p.sample,
                     format_number(p.diffusion_time() * 1e6), format_number(p.delta_hz()), format_number(p.phi_rms_value()),
                     format_number(lo), format_number(hi)});
    }
    std::cout << csv.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nanonmr: diffusion-limited nano-NMR simulation and analysis"};
    app.set_version_flag("--version", std::string(NANONMR_VERSION));
    app.require_subcommand(1);

    Common common;
    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic Qdyne record");
    add_common(simulate, common);
    simulate->add_option("--preset", sim.preset, "qdyne-1 ... qdyne-6")->capture_default_str();
    simulate->add_option("--config", sim.config, "key = value file applied on top of the preset");
    simulate->add_option("--scale", sim.scale, "Fraction of the preset's total time")->capture_default_str();
    simulate->add_option("--model", sim.model, "powerlaw or exponential")->capture_default_str();
    simulate->add_option("--level", sim.level, "photon (full chain) or correlation (slice-group correlations)")
        ->capture_default_str();
    simulate->add_flag("--csv", sim.csv, "Also write trace.csv (traces up to 1e6 values)");
    simulate->add_option("--noise-scale", sim.noise_scale, "Shot-noise multiplier for --level correlation")
        ->capture_default_str();

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Fit a trace under both envelope models");
    add_common(analyze, common);
    analyze->add_option("trace", an.trace, "Trace file written by simulate")->required();
    analyze->add_option("--window", an.window, "Frequency search window lo hi [Hz]")->expected(2);
    analyze->add_option("--reference", an.reference, "Reference frequency for the rmse [Hz]");
    analyze->add_option("--restarts", an.restarts, "Global-fit restarts per group")->capture_default_str();
    analyze->add_flag("--fix-phase,!--free-phase", an.fix_phase, "Keep phi fixed at 0 (default) or fit it");
    analyze->add_option("--fix-amplitude", an.fix_amplitude, "Fix a1 to this value in both models");
    analyze->add_flag("--detrend", an.detrend, "Remove a slow exponential before fitting");
    analyze->add_flag("--no-global", an.no_global, "Skip global fits");
    analyze->add_flag("--no-local", an.no_local, "Skip local fits");

    SpectrumArgs sp;
    auto* spectrum = app.add_subcommand("spectrum", "Spectra of the exponential, power-law and mixed envelopes");
    add_common(spectrum, common);
    spectrum->add_option("--td", sp.T_D, "Diffusion time T_D [s]")->capture_default_str();
    spectrum->add_option("--te-factor", sp.te_factor, "T_E / T_D of the mixed model")->capture_default_str();
    spectrum->add_option("--lo", sp.lo, "Lowest omega / omega_D")->capture_default_str();
    spectrum->add_option("--hi", sp.hi, "Highest omega / omega_D")->capture_default_str();
    spectrum->add_option("--per-decade", sp.per_decade, "Grid points per decade")->capture_default_str();

    McArgs mc;
    auto* mc_cmd = app.add_subcommand("mc-oracle", "Random-walk Monte Carlo of the dipolar field correlation");
    add_common(mc_cmd, common);
    mc_cmd->add_option("--particles", mc.particles)->capture_default_str();
    mc_cmd->add_option("--steps", mc.steps)->capture_default_str();
    mc_cmd->add_option("--depth", mc.depth, "Sensor depth d [m]")->capture_default_str();
    mc_cmd->add_option("--diffusion", mc.diffusion, "Diffusion coefficient D [m^2/s]")->capture_default_str();
    mc_cmd->add_option("--rescale", mc.rescale, "Scale d by s and D by s^2")->capture_default_str();
    mc_cmd->add_option("--estimator", mc.estimator, "self-term or field")->capture_default_str();
    mc_cmd->add_option("--kernel", mc.kernel, "dipolar or scalar")->capture_default_str();

    SensitivityArgs se;
    auto* sens = app.add_subcommand("sensitivity", "Fisher-information sensitivity ratios versus delta");
    add_common(sens, common);
    sens->add_option("--td", se.T_D, "Diffusion time T_D [s]")->capture_default_str();
    sens->add_option("--ttot-factor", se.t_tot_factor, "T_tot / T_D")->capture_default_str();
    sens->add_option("--te-factor", se.te_factor, "T_E / T_D for the mixed curve")->capture_default_str();
    sens->add_option("--lo", se.lo, "Lowest delta T_D")->capture_default_str();
    sens->add_option("--hi", se.hi, "Highest delta T_D")->capture_default_str();
    sens->add_option("--points", se.points)->capture_default_str();

    auto* presets = app.add_subcommand("preset-list", "Print the Qdyne presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (common.threads > 0) set_thread_count(common.threads);
        if (simulate->parsed()) return cmd_simulate(common, sim);
        if (analyze->parsed()) return cmd_analyze(common, an);
        if (spectrum->parsed()) return cmd_spectrum(common, sp);
        if (mc_cmd->parsed()) return cmd_mc_oracle(common, mc);
        if (sens->parsed()) return cmd_sensitivity(common, se);
        if (presets->parsed()) return cmd_preset_list();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
