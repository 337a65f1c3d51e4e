#pragma once

#include <cstddef>

#include "oce/core/raster.hpp"
#include "oce/recon/nufft.hpp"

namespace oce::recon {

/// Inverse DFT along k per A-scan; keeps the n_k/2 positive-delay rows.
/// Throws DomainError for odd n_k.
ComplexImage reconstruct_ifft(const SpectralFrame &frame);

/// Zeroes negative delays deeper than guard_rows in the full-range delay
/// domain and transforms back. Idempotent.
SpectralFrame suppress_negative_delay(const SpectralFrame &frame, std::size_t guard_rows);

struct IsamConfig {
    double k_min = 0.0;
    double k_max = 0.0;
    double nufft_oversampling = 2.0;
    int kernel_width = 8;
    double kernel_beta = 0.0;  // <= 0 selects the width/oversampling default
    std::size_t focus_row = 0;

    static IsamConfig for_frame(const SpectralFrame &frame, std::size_t focus_row);
    void validate() const;
};

/// Interferometric synthetic aperture refocusing. Per lateral frequency q_x
/// the spectrum is mapped from k onto the axial frequency
/// q_z = sqrt((2k)^2 - q_x^2) and brought onto the uniform delay raster with a
/// gridding NUFFT; evanescent samples are dropped. Output has the same raster
/// as reconstruct_ifft(), and equals it on the q_x = 0 column.
ComplexImage isam_resample(const SpectralFrame &frame, const IsamConfig &cfg);

} // namespace oce::recon
