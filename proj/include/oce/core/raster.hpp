#pragma once

// Shared raster and field containers. Axis 0 is axial/depth (z), axis 1 is
// lateral (x); storage is row-major so an A-scan is a strided column.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oce/core/error.hpp"

namespace oce {

using cplx = std::complex<double>;

struct Geometry {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double pitch_axial = 1.0;    // um / px
    double pitch_lateral = 1.0;  // um / px

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Geometry &o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const Geometry &) const = default;
};

template <typename T>
class Raster {
  public:
    using value_type = T;

    Raster() = default;
    Raster(std::size_t rows, std::size_t cols, T fill = T{})
        : Raster(Geometry{rows, cols, 1.0, 1.0}, fill) {}
    explicit Raster(const Geometry &g, T fill = T{}) : geom_(g), data_(g.size(), fill) {
        if (g.rows == 0 || g.cols == 0) {
            throw ShapeError("raster dimensions must be >= 1");
        }
    }
    Raster(const Geometry &g, std::vector<T> data) : geom_(g), data_(std::move(data)) {
        if (g.rows == 0 || g.cols == 0) {
            throw ShapeError("raster dimensions must be >= 1");
        }
        if (data_.size() != g.size()) {
            throw ShapeError("raster data length does not match rows*cols");
        }
    }

    std::size_t rows() const { return geom_.rows; }
    std::size_t cols() const { return geom_.cols; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    const Geometry &geometry() const { return geom_; }
    double pitch_axial() const { return geom_.pitch_axial; }
    double pitch_lateral() const { return geom_.pitch_lateral; }
    void set_pitch(double axial, double lateral) {
        geom_.pitch_axial = axial;
        geom_.pitch_lateral = lateral;
    }

    T &operator()(std::size_t r, std::size_t c) { return data_[r * geom_.cols + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data_[r * geom_.cols + c]; }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T> &vec() { return data_; }
    const std::vector<T> &vec() const { return data_; }

    bool operator==(const Raster &) const = default;

  private:
    Geometry geom_{};
    std::vector<T> data_;
};

using Image = Raster<double>;
using ComplexImage = Raster<cplx>;
using Mask = Raster<std::uint8_t>;

bool all_finite(const Image &img);
bool all_finite(const ComplexImage &img);

Image magnitude(const ComplexImage &img);

/// Uniformly sampled interferogram, axis 0 = wavenumber, axis 1 = lateral A-scan.
/// Sample j sits at k_min + j * dk with dk = (k_max - k_min) / (n_k - 1).
struct SpectralFrame {
    std::size_t n_k = 0;
    std::size_t n_x = 0;
    double k_min = 0.0;          // rad / um
    double k_max = 0.0;          // rad / um
    double pitch_lateral = 1.0;  // um / A-scan
    std::vector<cplx> data;      // n_k * n_x, row-major

    SpectralFrame() = default;
    SpectralFrame(std::size_t nk, std::size_t nx, double kmin, double kmax, double pitch = 1.0);

    cplx &operator()(std::size_t k, std::size_t x) { return data[k * n_x + x]; }
    const cplx &operator()(std::size_t k, std::size_t x) const { return data[k * n_x + x]; }

    double dk() const { return (k_max - k_min) / static_cast<double>(n_k - 1); }
    double k_at(std::size_t j) const { return k_min + dk() * static_cast<double>(j); }
    /// Depth sampling of the delay domain produced by an inverse DFT along k.
    double depth_pitch() const;
    void validate() const;
};

/// Dense per-pixel displacement in pixels. Convention shared by every module:
/// ref(p) ~= mov(p + d(p)), with d = (axial, lateral).
struct DisplacementField {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> axial;
    std::vector<double> lateral;
    std::vector<std::uint8_t> valid;

    DisplacementField() = default;
    DisplacementField(std::size_t rows, std::size_t cols);

    static DisplacementField constant(std::size_t rows, std::size_t cols, double u_axial,
                                      double u_lateral);

    std::size_t size() const { return rows * cols; }
    std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }

    /// Bilinear sample at a sub-pixel position; positions outside the raster
    /// are clamped to the nearest edge.
    void sample(double r, double c, double &u_axial, double &u_lateral) const;

    /// Zero the displacement wherever valid == 0.
    void enforce_invalid_identity();
    void validate() const;
    bool operator==(const DisplacementField &) const = default;
};

struct FrameStack {
    std::vector<Image> frames;
    std::vector<std::int64_t> timestamps;

    FrameStack() = default;
    explicit FrameStack(std::vector<Image> f) : frames(std::move(f)) {}

    std::size_t size() const { return frames.size(); }
    const Image &operator[](std::size_t i) const { return frames[i]; }
    Image &operator[](std::size_t i) { return frames[i]; }
    const Geometry &geometry() const { return frames.front().geometry(); }

    /// Throws unless there are >= min_frames frames sharing one geometry.
    void validate(std::size_t min_frames = 2) const;
};

/// Bilinear interpolation helper with clamped edges; exact for constant data.
template <typename Fetch>
double bilinear_clamped(std::size_t rows, std::size_t cols, double r, double c, Fetch &&at);

} // namespace oce

#include "oce/core/raster_inl.hpp"
