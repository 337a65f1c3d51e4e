#pragma once

// Thin FFTW wrapper. Transforms are unnormalised; forward uses exp(-i...),
// backward exp(+i...). Plans are cached per shape and created with
// FFTW_ESTIMATE | FFTW_UNALIGNED so results do not depend on buffer alignment.

#include <cstddef>
#include <span>

#include "oce/core/raster.hpp"

namespace oce::fft {

enum class Direction { forward, backward };

void transform(std::span<cplx> data, Direction dir);

/// Transforms each row (length cols) of a row-major rows x cols array.
void transform_rows(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir);

/// Transforms each column (length rows) of a row-major rows x cols array.
void transform_cols(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir);

void transform_2d(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir);

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t next_fast_size(std::size_t n);

} // namespace oce::fft
