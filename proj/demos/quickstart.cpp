// SPDX-License-Identifier: Apache-2.0
//
// Quick tour: envelope values, a short synthetic Qdyne ensemble for preset qdyne-1,
// and the frequency estimates under both envelope models.

#include <cstdio>

#include "nanonmr/nanonmr.hpp"

using namespace nanonmr;

int main() {
    const auto& preset = qdyne_preset("qdyne-1");
    const double T_D = preset.diffusion_time();
    std::printf("qdyne-1: T_D = %.1f us, delta = %.1f Hz, phi_rms = %.3f\n", T_D * 1e6, preset.delta_hz(),
                preset.phi_rms_value());

    for (double z : {0.1, 1.0, 10.0, 100.0})
        std::printf("  z = %6.1f   exponential %.3e   power law %.3e\n", z, exp_envelope(z), powerlaw_envelope(z));

    // A quarter of the run, 100 restarts per global fit.
    AnalysisSettings settings = settings_for(preset, 7);
    settings.n_restarts = 100;
    const auto result = run_matched_snr(preset, EnvelopeKind::PowerLaw, 0.25, 7, settings);

    std::printf("groups: %zu, flat-histogram rmse %.0f Hz\n", result.powerlaw.global.size(), result.flat_limit_hz);
    if (result.powerlaw.global_stats && result.exponential.global_stats)
        std::printf("global fits: rmse power law %.0f Hz, exponential %.0f Hz\n", result.powerlaw.global_stats->rmse,
                    result.exponential.global_stats->rmse);
    if (result.ratio_local) std::printf("local-fit rmse ratio (power law / exponential): %.2f\n", *result.ratio_local);
    return 0;
}
