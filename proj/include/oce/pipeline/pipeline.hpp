#pragma once

// Simultaneous motion estimation and motion-compensated denoising:
//   preprocess -> pairwise flow -> compose to reference -> warp the original
//   frames -> denoise -> U^T -> re-estimate pairwise flow -> (repeat)

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oce/core/log_compress.hpp"
#include "oce/core/raster.hpp"
#include "oce/denoise/denoise.hpp"
#include "oce/flow/flow.hpp"
#include "oce/recon/recon.hpp"
#include "oce/warp/warp.hpp"

namespace oce::pipeline {

enum class Preprocess { ifft, isam };

struct ReconOptions {
    Preprocess mode = Preprocess::ifft;
    bool suppress_negative_delay = false;
    std::size_t guard_rows = 0;
    std::optional<std::size_t> focus_row;  // defaults to the middle row
    double nufft_oversampling = 2.0;
    int kernel_width = 8;
    double kernel_beta = 0.0;
    double floor_db = kDefaultFloorDb;
};

/// How denoised frames are taken back to their own positions. `adjoint` is
/// U^T as is; `normalized_adjoint` divides by U^T 1 and keeps the original
/// pixel where no output row reads it, which removes the dark and doubled
/// bands U^T leaves along edges the motion uncovers.
enum class Unwarp { adjoint, normalized_adjoint };

struct PipelineConfig {
    ReconOptions recon;
    flow::FlowConfig flow;
    denoise::DenoiseConfig denoise;
    std::size_t iterations = 1;
    Unwarp unwarp = Unwarp::normalized_adjoint;
    std::optional<std::size_t> reference_index;  // defaults to the middle frame
    std::size_t metric_margin = 16;              // border excluded from field metrics

    void validate() const;
    std::size_t reference_for(std::size_t n_frames) const;
};

/// Optional ground truth. Images are in the same display units as the
/// pipeline frames; fields are pairwise i -> i + 1.
struct GroundTruth {
    std::vector<Image> clean;
    std::vector<DisplacementField> pairwise;
};

struct IterationRecord {
    std::vector<DisplacementField> fields_used;  // pairwise fields that built U
    std::vector<Mask> out_of_view;
    FrameStack warped;
    FrameStack denoised_warped;
    FrameStack unwarped;
    std::vector<DisplacementField> reestimated;
    double sigma = 0.0;
};

struct MetricRow {
    std::string metric;
    double value = 0.0;
    std::string frame_pair;
};

struct PipelineReport {
    std::size_t reference_index = 0;
    FrameStack preprocessed;
    std::vector<DisplacementField> initial_fields;
    std::vector<DisplacementField> final_fields;
    std::vector<IterationRecord> iterations;
    std::vector<MetricRow> metrics;
    std::vector<std::pair<std::string, double>> runtimes;  // seconds per stage

    const FrameStack &denoised() const { return iterations.back().unwarped; }
    double metric(const std::string &name, const std::string &frame_pair = "all") const;
};

/// Called with every image handed to a warp operator in the forward direction.
struct WarpEvent {
    std::size_t iteration;
    std::size_t frame;
    const Image *input;
};
using WarpObserver = std::function<void(const WarpEvent &)>;

/// Frames already in display units.
PipelineReport run_pipeline(const FrameStack &frames, const PipelineConfig &cfg, const GroundTruth *truth = nullptr,
                            const WarpObserver &observer = {});

/// Reconstructs spectra first (IFFT or ISAM), then log-compresses the stack
/// against its common maximum.
PipelineReport run_pipeline(const std::vector<SpectralFrame> &spectra, const PipelineConfig &cfg,
                            const GroundTruth *truth = nullptr, const WarpObserver &observer = {});

/// Reconstruction and stack log compression used by the spectral entry point.
FrameStack preprocess_spectra(const std::vector<SpectralFrame> &spectra, const ReconOptions &opts);

/// Complex frames to display units against their common maximum.
FrameStack log_compress_stack(const std::vector<ComplexImage> &frames, double floor_db);

/// Pairwise flow between neighbouring frames: result[i] relates frame i (ref)
/// and frame i + 1 (mov).
std::vector<DisplacementField> pairwise_flow(const FrameStack &frames, const flow::FlowConfig &cfg);

/// Metric rows for a finished report. Needs ground truth for field and image error rows.
std::vector<MetricRow> compute_metrics(const PipelineReport &report, const PipelineConfig &cfg,
                                       const GroundTruth *truth);

/// CSV with header metric,value,frame_pair. Values are printed with 17
/// significant digits so equal reports give equal files.
void write_metrics_csv(const std::vector<MetricRow> &rows, std::ostream &os);
void write_runtimes_csv(const PipelineReport &report, std::ostream &os);

} // namespace oce::pipeline
