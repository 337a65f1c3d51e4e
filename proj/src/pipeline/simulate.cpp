#include "oce/pipeline/simulate.hpp"

#include "oce/core/parallel.hpp"

namespace oce::pipeline {

SimulationOutput simulate(const SimulationConfig &cfg, double floor_db) {
    const auto scene = phantom::make_scene(cfg.scene);
    const auto seq = phantom::warp_scene_sequence(scene, cfg.scene, cfg.motion, cfg.noise);

    SimulationOutput out;
    out.noisy = log_compress_stack(seq.noisy, floor_db);
    out.clean = log_compress_stack(seq.clean, floor_db);
    out.pairwise = seq.fields;
    if (cfg.write_spectra) {
        out.spectra.resize(seq.noisy.size());
        parallel_for(seq.noisy.size(), [&](std::size_t t) {
            out.spectra[t] = phantom::synthesize_spectrum(seq.noisy[t], cfg.spectral_samples(), cfg.k_min, cfg.k_max);
            out.spectra[t].pitch_lateral = cfg.scene.pitch_lateral;
        });
    }
    return out;
}

} // namespace oce::pipeline
