#pragma once

// Synthetic speckle phantoms with exact ground truth: random-phase point
// scatterers under a coherent Gaussian PSF, analytically displaced between
// frames, plus complex Gaussian noise.

#include <cstdint>
#include <vector>

#include "oce/core/raster.hpp"

namespace oce::phantom {

struct PhantomSpec {
    std::size_t rows = 256;
    std::size_t cols = 256;
    std::size_t n_scatterers = 12000;
    double reflectivity_min = 0.5;
    double reflectivity_max = 1.0;
    double psf_sigma_axial = 1.5;    // px
    double psf_sigma_lateral = 1.5;  // px
    std::size_t focus_row = 128;
    /// Growth of the complex lateral variance per row of scatterer depth away
    /// from focus (px^2 / row). A scatterer dz rows from focus gets the lateral
    /// profile exp(-x^2 / (2 (s^2 - i * rate * dz))), i.e. a Gaussian widened to
    /// sqrt(s^2 + (rate*dz / s)^2) with a matching quadratic phase. See
    /// defocus_rate_for() for the value consistent with a spectral geometry.
    double defocus_rate = 0.0;
    /// Scatterers are drawn over the raster grown by this many pixels on every
    /// side, so moving scenes do not expose empty borders.
    double margin = 0.0;
    double pitch_axial = 1.0;    // um / px, metadata only
    double pitch_lateral = 2.0;  // um / px, metadata only
    std::uint64_t seed = 1;

    void validate() const;
};

struct Scatterer {
    double row = 0.0;
    double col = 0.0;
    double reflectivity = 0.0;
    double phase = 0.0;  // radians, uniform in [0, 2 pi)
};

enum class MotionKind { uniform_lateral, smooth_compression };

struct MotionSpec {
    MotionKind kind = MotionKind::uniform_lateral;
    std::size_t n_frames = 5;
    double step_px = 5.0;          // uniform_lateral
    double compression_peak = 2.0; // smooth_compression, px of axial motion per step
    double center_col = -1.0;      // loading profile centre; < 0 means cols / 2
    double width_px = 60.0;        // loading profile Gaussian width
    std::uint64_t seed = 0;

    void validate() const;
};

enum class NoiseModel { additive_gaussian_complex };

struct NoiseSpec {
    NoiseModel model = NoiseModel::additive_gaussian_complex;
    /// Complex noise standard deviation (E|n|^2 = sigma^2) relative to a
    /// signal normalised to unit peak magnitude.
    double sigma = 0.0;
    std::uint64_t seed = 7;

    void validate() const;
};

std::vector<Scatterer> make_scene(const PhantomSpec &spec);

ComplexImage render_complex(const std::vector<Scatterer> &scene, const PhantomSpec &spec);

/// Per lateral column, forward DFT of the depth profile zero-padded to n_k.
/// reconstruct_ifft() recovers the image exactly when n_k >= 2 * rows.
SpectralFrame synthesize_spectrum(const ComplexImage &img, std::size_t n_k, double k_min, double k_max);

/// Defocus rate (px^2 / row) matching the diffraction of a Gaussian beam for
/// the given spectral sampling and lateral pitch, at the centre wavenumber.
double defocus_rate_for(std::size_t n_k, double k_min, double k_max, double pitch_lateral);

/// Analytic increment displacement of one frame step at a sub-pixel position.
void motion_step(const MotionSpec &motion, std::size_t rows, std::size_t cols, double r, double c,
                 double &u_axial, double &u_lateral);

/// n_frames - 1 pairwise fields, field i relating frame i to frame i + 1.
std::vector<DisplacementField> make_motion(const MotionSpec &motion, std::size_t rows, std::size_t cols);

/// Exact field d with frame_ref(p) ~= frame_t(p + d(p)), obtained by iterating
/// (or inverting) the analytic step map.
DisplacementField ground_truth_to_reference(const MotionSpec &motion, std::size_t rows,
                                            std::size_t cols, std::size_t reference, std::size_t t);

struct SceneSequence {
    std::vector<ComplexImage> clean;
    std::vector<ComplexImage> noisy;
    std::vector<DisplacementField> fields;  // pairwise ground truth, i -> i + 1
    double scale = 1.0;                     // applied to the rendered signal
};

void add_complex_noise(ComplexImage &img, double sigma, std::uint64_t seed);

/// Renders every frame from analytically displaced scatterers, normalises all
/// frames by the peak magnitude of clean frame 0, then adds independent noise.
SceneSequence warp_scene_sequence(const std::vector<Scatterer> &scene, const PhantomSpec &spec,
                                  const MotionSpec &motion, const NoiseSpec &noise);

} // namespace oce::phantom
