#pragma once

#include "oce/core/raster.hpp"

namespace oce {

inline constexpr double kDefaultFloorDb = -60.0;

/// Log-magnitude display mapping onto [0, 1]:
/// out = (max(20 log10(|z| / ref_max), floor_db) - floor_db) / -floor_db.
/// Throws DomainError for an all-zero image or floor_db >= 0.
Image log_compress(const ComplexImage &img, double floor_db = kDefaultFloorDb);

/// Same mapping against an explicit reference maximum, so several frames can
/// share one normalisation. Values above ref_max saturate at 1.
Image log_compress(const ComplexImage &img, double floor_db, double ref_max);

double max_magnitude(const ComplexImage &img);

} // namespace oce
