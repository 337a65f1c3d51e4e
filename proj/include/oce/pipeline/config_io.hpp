#pragma once

// Mapping between key=value configs and the library's option structs.

#include <set>
#include <string>

#include "oce/core/config.hpp"
#include "oce/phantom/phantom.hpp"
#include "oce/pipeline/pipeline.hpp"

namespace oce::pipeline {

struct SimulationConfig {
    phantom::PhantomSpec scene;
    phantom::MotionSpec motion;
    phantom::NoiseSpec noise;
    bool defocus_auto = false;   // scene.defocus_rate = auto
    bool write_spectra = false;  // spectral.enabled
    std::size_t n_k = 0;         // 0 selects 2 * rows
    double k_min = 2.0 * 3.141592653589793 / 0.87;
    double k_max = 2.0 * 3.141592653589793 / 0.73;

    std::size_t spectral_samples() const { return n_k ? n_k : 2 * scene.rows; }
};

const std::set<std::string> &known_config_keys();

/// Throws ConfigError on unknown keys or malformed values.
SimulationConfig simulation_config_from(const KeyValueConfig &kv);
PipelineConfig pipeline_config_from(const KeyValueConfig &kv);

flow::PeakFit parse_peak_fit(const std::string &s);
std::string to_string(flow::PeakFit f);

} // namespace oce::pipeline
