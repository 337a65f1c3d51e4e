#pragma once

// Phantom sequence in the form the pipeline consumes: display-unit frames,
// clean references and pairwise ground truth, optionally spectra.

#include <vector>

#include "oce/core/log_compress.hpp"
#include "oce/pipeline/config_io.hpp"

namespace oce::pipeline {

struct SimulationOutput {
    FrameStack noisy;                          // log-compressed against the noisy stack maximum
    FrameStack clean;                          // log-compressed against the clean stack maximum
    std::vector<DisplacementField> pairwise;   // frame i -> i + 1
    std::vector<SpectralFrame> spectra;        // of the noisy complex frames, when requested
};

SimulationOutput simulate(const SimulationConfig &cfg, double floor_db = kDefaultFloorDb);

} // namespace oce::pipeline
