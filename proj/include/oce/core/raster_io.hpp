#pragma once

// RasterFile container: "OCER" magic, u16 version, u8 dtype, u8 ndim, u32 dims,
// then a little-endian row-major payload (innermost dimension last).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oce/core/error.hpp"
#include "oce/core/raster.hpp"

namespace oce {

enum class DType : std::uint8_t { f32 = 0, f64 = 1, c64 = 2, u8 = 3 };

std::size_t dtype_size(DType t);

inline constexpr std::uint16_t kRasterVersion = 1;
inline constexpr std::size_t kRasterHeaderFixed = 8; // magic + version + dtype + ndim

class RasterError : public Error {
  public:
    enum class Code { bad_magic, bad_version, truncated, trailing_bytes, unsupported_dtype, io, shape };

    RasterError(Code code, const std::string &what) : Error(what), code_(code) {}
    Code code() const { return code_; }

  private:
    Code code_;
};

struct RasterArray {
    using Storage = std::variant<std::vector<float>, std::vector<double>,
                                 std::vector<std::complex<float>>, std::vector<std::uint8_t>>;

    std::vector<std::uint32_t> dims;
    Storage values;

    DType dtype() const { return static_cast<DType>(values.index()); }
    std::size_t element_count() const;
};

std::vector<std::byte> encode_raster(const RasterArray &array);
RasterArray decode_raster(std::span<const std::byte> bytes);

RasterArray read_raster(const std::filesystem::path &path);
void write_raster(const RasterArray &array, const std::filesystem::path &path);

// Typed views onto the container. Pixel pitch is not stored in the file.
RasterArray to_raster(const Image &img, DType dtype = DType::f64);
RasterArray to_raster(const ComplexImage &img);
RasterArray to_raster(const Mask &mask);
RasterArray to_raster(const SpectralFrame &frame);

Image image_from_raster(const RasterArray &array);
ComplexImage complex_from_raster(const RasterArray &array);
Mask mask_from_raster(const RasterArray &array);
SpectralFrame spectral_from_raster(const RasterArray &array, double k_min, double k_max,
                                   double pitch_lateral = 1.0);

/// A 3-D array [frames, rows, cols] as its 2-D slices; a 2-D array is one slice.
std::vector<RasterArray> split_frames(const RasterArray &array);
/// Inverse of split_frames(): slices must share dtype and shape.
RasterArray stack_frames(const std::vector<RasterArray> &slices);

/// Writes <prefix>_axial, <prefix>_lateral (f64) and <prefix>_mask (u8).
void write_field(const DisplacementField &field, const std::string &prefix);
DisplacementField read_field(const std::string &prefix);

} // namespace oce
