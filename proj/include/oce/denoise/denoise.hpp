#pragma once

// Collaborative filtering of a motion-compensated frame stack. Blocks are
// block x block spatially and span every frame, so grouping searches space
// only. Stage one hard-thresholds in the separable group transform; the
// optional second stage applies empirical Wiener shrinkage against the stage
// one estimate.

#include <cstddef>
#include <utility>
#include <vector>

#include "oce/core/raster.hpp"

namespace oce::denoise {

struct DenoiseConfig {
    std::size_t block = 8;
    bool use_full_temporal = true;  // false: every frame is filtered on its own
    std::size_t search_window = 24;
    std::size_t max_group = 16;
    std::size_t step = 4;
    double hard_lambda = 2.7;
    double sigma = -1.0;  // < 0 selects estimate_sigma()
    bool wiener_stage = true;

    void validate() const;
};

struct BlockGroup {
    std::size_t ref_row = 0, ref_col = 0;
    std::vector<std::pair<std::size_t, std::size_t>> members;  // member 0 is the reference
    std::vector<double> distances;
    std::size_t block = 0, frames = 0;
    std::vector<double> data;  // [member][frame][row][col]

    std::size_t member_size() const { return block * block * frames; }
};

/// Top-left block positions along one axis: multiples of step, plus the last
/// position n - block when step does not land on it.
std::vector<std::size_t> lattice_positions(std::size_t n, std::size_t block, std::size_t step);

/// median(|HH|) / 0.6745 over the finest diagonal Haar subband of frame 0.
double estimate_sigma(const FrameStack &stack);

/// `masks` holds one out-of-view mask per frame, or is empty.
BlockGroup group_blocks(const FrameStack &stack, const std::vector<Mask> &masks, std::size_t ref_row,
                        std::size_t ref_col, const DenoiseConfig &cfg);

/// Stacks the given member coordinates of `stack` into a group.
BlockGroup extract_group(const FrameStack &stack, std::size_t block,
                         const std::vector<std::pair<std::size_t, std::size_t>> &members);

struct ShrinkResult {
    std::vector<double> data;
    double weight = 0.0;
    std::size_t nonzero = 0;
};

/// Hard threshold at hard_lambda * sigma; the all-DC coefficient is kept.
/// Weight 1 / (1 + nonzero).
ShrinkResult shrink_group_hard(const BlockGroup &group, double sigma, double hard_lambda);

/// Empirical Wiener shrinkage P^2 / (P^2 + sigma^2) with P the pilot's
/// coefficients. Weight 1 / (1 + sum of squared gains).
ShrinkResult shrink_group_wiener(const BlockGroup &noisy, const BlockGroup &pilot, double sigma);

/// Weighted overlap-add of denoised groups with a Kaiser (beta = 2) taper.
class Aggregator {
  public:
    Aggregator(const Geometry &geom, std::size_t frames, std::size_t block, const std::vector<Mask> *masks = nullptr);

    /// Member 0 is treated as the reference block of its group.
    void add(const std::vector<std::pair<std::size_t, std::size_t>> &members, const std::vector<double> &data,
             double weight);
    /// Throws if some pixel received no weight.
    FrameStack result() const;

  private:
    Geometry geom_;
    std::size_t frames_, block_;
    const std::vector<Mask> *masks_;
    std::vector<double> window_;
    std::vector<std::vector<double>> num_, den_;
};

struct AggregateItem {
    std::vector<std::pair<std::size_t, std::size_t>> members;
    std::vector<double> data;
    double weight = 1.0;
};

FrameStack aggregate(const std::vector<AggregateItem> &items, const Geometry &geom, std::size_t frames,
                     std::size_t block);

/// Full two-stage filter. Out-of-view pixels are restored from the input.
/// `sigma_used` receives the noise level actually applied.
FrameStack denoise_stack(const FrameStack &stack, const std::vector<Mask> &masks, const DenoiseConfig &cfg,
                         double *sigma_used = nullptr);

} // namespace oce::denoise
