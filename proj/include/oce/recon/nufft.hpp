#pragma once

// One-dimensional type-1 (non-uniform to uniform) NUFFT by Kaiser-Bessel
// gridding onto an oversampled grid, followed by an FFT and image-domain
// deapodisation. Evaluates
//
//     f(r) = sum_j c_j exp(+2 pi i t_j r / n),   r = first, ..., first + count - 1
//
// for real positions t_j measured in units where the period is n.

#include <cstddef>
#include <span>
#include <vector>

#include "oce/core/raster.hpp"

namespace oce::recon {

struct NufftOptions {
    double oversampling = 2.0;
    int kernel_width = 8;
    double kernel_beta = 0.0;  // <= 0 selects kaiser_bessel_beta(width, oversampling)
};

/// beta = pi * sqrt((w / s)^2 (s - 1/2)^2 - 0.8)
double kaiser_bessel_beta(int width, double oversampling);

/// Kernel I0(beta sqrt(1 - (2x/w)^2)) on |x| <= w/2, zero outside.
double kaiser_bessel(double x, int width, double beta);

/// Continuous Fourier transform of kaiser_bessel() at frequency nu (cycles per sample).
double kaiser_bessel_ft(double nu, int width, double beta);

class GriddingNufft {
  public:
    GriddingNufft(std::size_t period, std::ptrdiff_t first, std::size_t count, NufftOptions opts = {});

    std::size_t period() const { return period_; }
    std::size_t grid_size() const { return grid_; }
    std::size_t output_count() const { return count_; }

    void execute(std::span<const double> positions, std::span<const cplx> strengths,
                 std::span<cplx> out) const;

  private:
    std::size_t period_;
    std::ptrdiff_t first_;
    std::ptrdiff_t shift_ = 0;
    std::size_t count_;
    std::size_t grid_;
    int width_;
    double beta_;
    std::vector<double> deapod_;
};

} // namespace oce::recon
