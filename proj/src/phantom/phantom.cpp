#include "oce/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oce/core/fft.hpp"
#include "oce/core/parallel.hpp"

namespace oce::phantom {

using std::numbers::pi;

namespace {
// splitmix64 finaliser over (seed, stream)
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace

void PhantomSpec::validate() const {
    if (rows == 0 || cols == 0) throw ShapeError("phantom raster must be non-empty");
    if (focus_row >= rows) throw DomainError("phantom focus_row must lie inside the raster");
    if (!(psf_sigma_axial > 0.0) || !(psf_sigma_lateral > 0.0)) {
        throw DomainError("phantom PSF sigmas must be positive");
    }
    if (!(reflectivity_min > 0.0) || reflectivity_max < reflectivity_min) {
        throw DomainError("phantom reflectivity range must be positive and ordered");
    }
    if (margin < 0.0) throw DomainError("phantom margin must be non-negative");
}

void MotionSpec::validate() const {
    if (n_frames < 2) throw DomainError("motion needs at least two frames");
    if (kind == MotionKind::smooth_compression && !(width_px > 0.0)) {
        throw DomainError("compression width must be positive");
    }
}

void NoiseSpec::validate() const {
    if (!(sigma >= 0.0)) throw DomainError("noise sigma must be non-negative");
}

std::vector<Scatterer> make_scene(const PhantomSpec &spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = static_cast<double>(spec.rows) + 2.0 * spec.margin;
    const double w = static_cast<double>(spec.cols) + 2.0 * spec.margin;
    std::vector<Scatterer> scene(spec.n_scatterers);
    for (auto &s : scene) {
        s.row = unit(rng) * h - spec.margin;
        s.col = unit(rng) * w - spec.margin;
        s.reflectivity = spec.reflectivity_min + unit(rng) * (spec.reflectivity_max - spec.reflectivity_min);
        s.phase = 2.0 * pi * unit(rng);
    }
    return scene;
}

ComplexImage render_complex(const std::vector<Scatterer> &scene, const PhantomSpec &spec) {
    spec.validate();
    ComplexImage img(Geometry{spec.rows, spec.cols, spec.pitch_axial, spec.pitch_lateral});
    const double sa = spec.psf_sigma_axial;
    const double sl2 = spec.psf_sigma_lateral * spec.psf_sigma_lateral;
    const long rows = static_cast<long>(spec.rows);
    const long cols = static_cast<long>(spec.cols);
    const long axial_reach = static_cast<long>(std::ceil(5.0 * sa));

    std::vector<cplx> axial, lateral;
    for (const Scatterer &s : scene) {
        // Complex lateral variance s^2 - i*beta; |profile| widens with |beta|.
        const double beta = spec.defocus_rate * (s.row - static_cast<double>(spec.focus_row));
        const cplx var(sl2, -beta);
        const cplx norm = std::sqrt(cplx(sl2, 0.0) / var);
        const double sigma_eff = std::sqrt(sl2 + beta * beta / sl2);
        const long lateral_reach = static_cast<long>(std::ceil(5.0 * sigma_eff));

        const long r_lo = std::max(0L, static_cast<long>(std::floor(s.row)) - axial_reach);
        const long r_hi = std::min(rows - 1, static_cast<long>(std::ceil(s.row)) + axial_reach);
        const long c_lo = std::max(0L, static_cast<long>(std::floor(s.col)) - lateral_reach);
        const long c_hi = std::min(cols - 1, static_cast<long>(std::ceil(s.col)) + lateral_reach);
        if (r_lo > r_hi || c_lo > c_hi) continue;

        // The axial carrier exp(i pi (r - r0)) centres the depth spectrum in the band.
        const cplx amp = s.reflectivity * std::polar(1.0, s.phase);
        axial.resize(static_cast<std::size_t>(r_hi - r_lo + 1));
        for (long r = r_lo; r <= r_hi; ++r) {
            const double dz = static_cast<double>(r) - s.row;
            axial[static_cast<std::size_t>(r - r_lo)] =
                amp * std::exp(-dz * dz / (2.0 * sa * sa)) * std::polar(1.0, pi * dz);
        }
        lateral.resize(static_cast<std::size_t>(c_hi - c_lo + 1));
        for (long c = c_lo; c <= c_hi; ++c) {
            const double dx = static_cast<double>(c) - s.col;
            lateral[static_cast<std::size_t>(c - c_lo)] = norm * std::exp(-dx * dx / (2.0 * var));
        }
        for (long r = r_lo; r <= r_hi; ++r) {
            const cplx a = axial[static_cast<std::size_t>(r - r_lo)];
            cplx *row = &img(static_cast<std::size_t>(r), 0);
            for (long c = c_lo; c <= c_hi; ++c) row[c] += a * lateral[static_cast<std::size_t>(c - c_lo)];
        }
    }
    return img;
}

SpectralFrame synthesize_spectrum(const ComplexImage &img, std::size_t n_k, double k_min, double k_max) {
    if (n_k < img.rows()) throw ShapeError("synthesize_spectrum: n_k must be >= image rows");
    SpectralFrame frame(n_k, img.cols(), k_min, k_max, img.pitch_lateral());
    std::copy(img.data().begin(), img.data().end(), frame.data.begin());
    fft::transform_cols(frame.data, n_k, img.cols(), fft::Direction::forward);
    return frame;
}

double defocus_rate_for(std::size_t n_k, double k_min, double k_max, double pitch_lateral) {
    const SpectralFrame probe(n_k, 1, k_min, k_max, pitch_lateral);
    const double k_centre = 0.5 * (k_min + k_max);
    return probe.depth_pitch() / (2.0 * k_centre * pitch_lateral * pitch_lateral);
}

void motion_step(const MotionSpec &motion, std::size_t rows, std::size_t cols, double r, double c,
                 double &u_axial, double &u_lateral) {
    if (motion.kind == MotionKind::uniform_lateral) {
        u_axial = 0.0;
        u_lateral = motion.step_px;
        return;
    }
    // Axial push decaying with depth, Gaussian in x; the lateral term makes the
    // field divergence free.
    const double depth = static_cast<double>(std::max<std::size_t>(rows, 2) - 1);
    const double centre = motion.center_col < 0.0 ? static_cast<double>(cols / 2) : motion.center_col;
    const double w = motion.width_px;
    const double zeta = r / depth;
    const double dx = c - centre;
    const double g = std::exp(-dx * dx / (2.0 * w * w));
    const double s = 0.5 * (1.0 + std::cos(pi * zeta));
    const double ds = -0.5 * pi * std::sin(pi * zeta) / depth;
    u_axial = motion.compression_peak * g * s;
    u_lateral = -motion.compression_peak * ds * w * std::sqrt(pi / 2.0) * std::erf(dx / (std::sqrt(2.0) * w));
}

std::vector<DisplacementField> make_motion(const MotionSpec &motion, std::size_t rows, std::size_t cols) {
    motion.validate();
    DisplacementField step(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = step.index(r, c);
            motion_step(motion, rows, cols, static_cast<double>(r), static_cast<double>(c), step.axial[i],
                        step.lateral[i]);
        }
    }
    return std::vector<DisplacementField>(motion.n_frames - 1, step);
}

DisplacementField ground_truth_to_reference(const MotionSpec &motion, std::size_t rows, std::size_t cols,
                                            std::size_t reference, std::size_t t) {
    motion.validate();
    if (reference >= motion.n_frames || t >= motion.n_frames) throw DomainError("frame index out of range");
    DisplacementField out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double z = static_cast<double>(r);
            double x = static_cast<double>(c);
            double ua = 0.0, ul = 0.0;
            if (t >= reference) {
                for (std::size_t s = reference; s < t; ++s) {
                    motion_step(motion, rows, cols, z, x, ua, ul);
                    z += ua;
                    x += ul;
                }
            } else {
                for (std::size_t s = reference; s > t; --s) {
                    // Solve y + step(y) = current by fixed-point iteration.
                    double yz = z, yx = x;
                    for (int it = 0; it < 100; ++it) {
                        motion_step(motion, rows, cols, yz, yx, ua, ul);
                        const double nz = z - ua, nx = x - ul;
                        const double delta = std::abs(nz - yz) + std::abs(nx - yx);
                        yz = nz;
                        yx = nx;
                        if (delta < 1e-14) break;
                    }
                    z = yz;
                    x = yx;
                }
            }
            const std::size_t i = out.index(r, c);
            out.axial[i] = z - static_cast<double>(r);
            out.lateral[i] = x - static_cast<double>(c);
        }
    }
    return out;
}

void add_complex_noise(ComplexImage &img, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw DomainError("noise sigma must be non-negative");
    if (sigma == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
    for (cplx &z : img.data()) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        z += cplx(re, im);
    }
}

SceneSequence warp_scene_sequence(const std::vector<Scatterer> &scene, const PhantomSpec &spec,
                                  const MotionSpec &motion, const NoiseSpec &noise) {
    spec.validate();
    motion.validate();
    noise.validate();

    std::vector<std::vector<Scatterer>> positions(motion.n_frames);
    positions[0] = scene;
    for (std::size_t t = 1; t < motion.n_frames; ++t) {
        positions[t] = positions[t - 1];
        for (Scatterer &s : positions[t]) {
            double ua = 0.0, ul = 0.0;
            motion_step(motion, spec.rows, spec.cols, s.row, s.col, ua, ul);
            s.row += ua;
            s.col += ul;
        }
    }

    SceneSequence seq;
    seq.clean.resize(motion.n_frames);
    parallel_for(motion.n_frames, [&](std::size_t t) { seq.clean[t] = render_complex(positions[t], spec); });

    double peak = 0.0;
    for (const cplx &z : seq.clean[0].data()) peak = std::max(peak, std::abs(z));
    seq.scale = peak > 0.0 ? 1.0 / peak : 1.0;
    for (auto &img : seq.clean) {
        for (cplx &z : img.data()) z *= seq.scale;
    }

    seq.noisy = seq.clean;
    for (std::size_t t = 0; t < motion.n_frames; ++t) {
        const std::uint64_t frame_seed = mix_seed(noise.seed, t);
        add_complex_noise(seq.noisy[t], noise.sigma, frame_seed);
    }
    seq.fields = make_motion(motion, spec.rows, spec.cols);
    return seq;
}

} // namespace oce::phantom
