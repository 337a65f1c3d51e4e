#pragma once

#include <vector>

#include "oce/core/raster.hpp"

namespace oce::pipeline {

/// sqrt(mean((est - truth)^2)) over pixels where mask != 0 (all pixels without a mask).
double rmse_image(const Image &est, const Image &truth, const Mask *mask = nullptr);

struct FieldRmse {
    double lateral = 0.0;
    double axial = 0.0;
    std::size_t samples = 0;
};

/// Per-axis RMSE over pixels valid in both fields and inside `region`.
FieldRmse rmse_field(const DisplacementField &est, const DisplacementField &truth, const Mask *region = nullptr);

/// Pooled over all pairs: every jointly valid pixel of every pair counts once.
FieldRmse rmse_field(const std::vector<DisplacementField> &est, const std::vector<DisplacementField> &truth,
                     const Mask *region = nullptr);

/// Zero-mean normalised correlation coefficient.
double ncc(const Image &est, const Image &truth);

/// Mean Frobenius norm of the central-difference Jacobian over valid
/// interior pixels.
double mean_gradient_magnitude(const DisplacementField &f, const Mask *region = nullptr);

/// 1 inside the raster minus a border of `margin` pixels.
Mask interior_mask(std::size_t rows, std::size_t cols, std::size_t margin);

} // namespace oce::pipeline
