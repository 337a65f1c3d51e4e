#include "oce/core/raster.hpp"

#include <cmath>
#include <numbers>

namespace oce {

bool all_finite(const Image &img) {
    for (double v : img.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool all_finite(const ComplexImage &img) {
    for (const cplx &v : img.data()) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

Image magnitude(const ComplexImage &img) {
    Image out(img.geometry());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::abs(img[i]);
    return out;
}

SpectralFrame::SpectralFrame(std::size_t nk, std::size_t nx, double kmin, double kmax, double pitch)
    : n_k(nk), n_x(nx), k_min(kmin), k_max(kmax), pitch_lateral(pitch), data(nk * nx) {
    validate();
}

double SpectralFrame::depth_pitch() const {
    return std::numbers::pi / (static_cast<double>(n_k) * dk());
}

void SpectralFrame::validate() const {
    if (n_k < 2 || n_x < 1) throw ShapeError("spectral frame needs n_k >= 2 and n_x >= 1");
    if (!(k_min < k_max)) throw DomainError("spectral frame requires k_min < k_max");
    if (data.size() != n_k * n_x) throw ShapeError("spectral frame data length mismatch");
}

DisplacementField::DisplacementField(std::size_t r, std::size_t c)
    : rows(r), cols(c), axial(r * c, 0.0), lateral(r * c, 0.0), valid(r * c, 1) {
    if (r == 0 || c == 0) throw ShapeError("displacement field dimensions must be >= 1");
}

DisplacementField DisplacementField::constant(std::size_t rows, std::size_t cols, double u_axial,
                                              double u_lateral) {
    DisplacementField f(rows, cols);
    std::fill(f.axial.begin(), f.axial.end(), u_axial);
    std::fill(f.lateral.begin(), f.lateral.end(), u_lateral);
    return f;
}

void DisplacementField::sample(double r, double c, double &u_axial, double &u_lateral) const {
    u_axial = bilinear_clamped(rows, cols, r, c,
                               [&](std::size_t i, std::size_t j) { return axial[i * cols + j]; });
    u_lateral = bilinear_clamped(rows, cols, r, c,
                                 [&](std::size_t i, std::size_t j) { return lateral[i * cols + j]; });
}

void DisplacementField::enforce_invalid_identity() {
    for (std::size_t i = 0; i < size(); ++i) {
        if (!valid[i]) {
            axial[i] = 0.0;
            lateral[i] = 0.0;
        }
    }
}

void DisplacementField::validate() const {
    const std::size_t n = rows * cols;
    if (n == 0 || axial.size() != n || lateral.size() != n || valid.size() != n) {
        throw ShapeError("displacement field planes do not match rows*cols");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(axial[i]) || !std::isfinite(lateral[i])) {
            throw DomainError("displacement field contains non-finite values");
        }
    }
}

void FrameStack::validate(std::size_t min_frames) const {
    if (frames.size() < min_frames) {
        throw ShapeError("frame stack needs at least " + std::to_string(min_frames) + " frames");
    }
    const Geometry &g = frames.front().geometry();
    for (const Image &f : frames) {
        if (!(f.geometry() == g)) throw ShapeError("frame stack geometry is not uniform");
    }
    if (!timestamps.empty() && timestamps.size() != frames.size()) {
        throw ShapeError("frame stack timestamps do not match frame count");
    }
}

} // namespace oce
