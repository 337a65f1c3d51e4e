#pragma once

// Multi-pass zero-normalised cross-correlation block matching with sub-pixel
// peak regression. Fields follow the shared convention ref(p) ~= mov(p + d(p)).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "oce/core/raster.hpp"

namespace oce::flow {

enum class PeakFit { gauss2d, gauss1x1d, parabolic };

struct PassSpec {
    std::size_t window = 32;
    std::size_t overlap = 16;
    std::size_t search_margin = 8;
};

struct FlowConfig {
    std::vector<PassSpec> passes{{64, 32, 16}, {32, 16, 8}, {16, 8, 4}};
    PeakFit peak_fit = PeakFit::gauss2d;
    double min_ncc = 0.3;
    std::size_t outlier_median_radius = 1;
    double outlier_tol = 1.5;

    void validate() const;
};

struct BlockCell {
    double center_row = 0.0;
    double center_col = 0.0;
    double du_axial = 0.0;
    double du_lateral = 0.0;
    double ncc_peak = 0.0;
    bool valid = false;
    bool clamped = false;  // sub-pixel offset hit the +-0.99 clamp
    bool filled = false;   // value came from fill_and_smooth
};

/// Block centres on a regular lattice: centre(i, j) = (origin_row + i * step,
/// origin_col + j * step).
struct BlockGridField {
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    std::size_t window = 0;
    std::size_t step = 0;
    double origin_row = 0.0;
    double origin_col = 0.0;
    std::vector<BlockCell> cells;
    bool all_invalid_warning = false;

    BlockCell &at(std::size_t i, std::size_t j) { return cells[i * grid_cols + j]; }
    const BlockCell &at(std::size_t i, std::size_t j) const { return cells[i * grid_cols + j]; }
    std::size_t valid_count() const;
};

/// Lattice of blocks of size `window` with the given overlap, centred in the image.
BlockGridField make_block_grid(std::size_t rows, std::size_t cols, std::size_t window, std::size_t overlap);

struct NccSurface {
    // Shift range relative to the pre-shifted window, inclusive.
    std::ptrdiff_t lo_axial = 0, hi_axial = 0, lo_lateral = 0, hi_lateral = 0;
    std::vector<double> values;  // (hi_axial - lo_axial + 1) x (hi_lateral - lo_lateral + 1)
    bool degenerate_ref = false;

    std::size_t width() const { return static_cast<std::size_t>(hi_lateral - lo_lateral + 1); }
    double at(std::ptrdiff_t da, std::ptrdiff_t dl) const {
        return values[static_cast<std::size_t>(da - lo_axial) * width() + static_cast<std::size_t>(dl - lo_lateral)];
    }
};

/// ZNCC between the ref block at (r0, c0) and mov blocks at (r0 + s_a, c0 + s_l)
/// for every shift s_a in [base_a - margin, base_a + margin] (likewise
/// laterally) that keeps the block inside mov. Returned shifts are relative to
/// the base. FFT numerator, summed-area denominators. Shifts whose mov window
/// has zero variance score 0.
NccSurface ncc_surface(const Image &ref, const Image &mov, std::size_t r0, std::size_t c0, std::size_t window,
                       std::ptrdiff_t base_axial, std::ptrdiff_t base_lateral, std::size_t margin);

struct SubpixelResult {
    double axial = 0.0;
    double lateral = 0.0;
    PeakFit used = PeakFit::gauss2d;
    bool clamped = false;
};

/// Sub-pixel offset of the maximum of a 3x3 neighbourhood c[dz + 1][dx + 1].
/// Falls back gauss2d -> gauss1x1d -> parabolic when logs are undefined or the
/// fit has no maximum. Offsets reaching |1| are clamped to 0.99.
SubpixelResult subpixel_peak(const std::array<std::array<double, 3>, 3> &c, PeakFit method);

/// One-axis three-point fit used when only one axis has both neighbours.
double subpixel_peak_1d(double minus, double centre, double plus, PeakFit method, bool &clamped);

/// Block matching for one pass. `init` (dense) supplies the window pre-shift,
/// rounded to whole pixels.
BlockGridField ncc_match_pass(const Image &ref, const Image &mov, std::size_t window, std::size_t overlap,
                              std::size_t search_margin, const FlowConfig &cfg,
                              const DisplacementField *init = nullptr);

/// Median outlier rejection followed by inverse-distance filling of invalid cells.
BlockGridField fill_and_smooth(const BlockGridField &grid, const FlowConfig &cfg);

/// Bilinear interpolation of the block grid to every pixel, clamped outside the
/// hull of block centres. A pixel is valid when its four surrounding cells are.
DisplacementField upsample_field(const BlockGridField &grid, std::size_t rows, std::size_t cols);

/// Full coarse-to-fine estimate. Passes whose lattice would be smaller than
/// 2x2 for this image are skipped; at least one pass must run.
DisplacementField estimate_flow(const Image &ref, const Image &mov, const FlowConfig &cfg);

} // namespace oce::flow
