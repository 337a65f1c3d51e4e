#pragma once

#include <filesystem>

#include "oce/core/raster.hpp"

namespace oce {

/// 8-bit binary PGM (P5) preview. Values are clamped to [lo, hi] and quantised;
/// the output is lossy and for inspection only.
void write_pgm(const Image &img, const std::filesystem::path &path, double lo = 0.0, double hi = 1.0);

} // namespace oce
