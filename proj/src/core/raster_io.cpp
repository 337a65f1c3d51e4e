#include "oce/core/raster_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <type_traits>

namespace oce {

namespace {

constexpr char kMagic[4] = {'O', 'C', 'E', 'R'};

void put_u16(std::vector<std::byte> &out, std::uint16_t v) {
    out.push_back(static_cast<std::byte>(v & 0xff));
    out.push_back(static_cast<std::byte>((v >> 8) & 0xff));
}

void put_u32(std::vector<std::byte> &out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::byte>((v >> s) & 0xff));
}

void put_u64(std::vector<std::byte> &out, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::byte>((v >> s) & 0xff));
}

std::uint32_t get_u32(const std::byte *p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint32_t>(p[i]);
    return v;
}

std::uint64_t get_u64(const std::byte *p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(p[i]);
    return v;
}

void put_f32(std::vector<std::byte> &out, float f) {
    if (!std::isfinite(f)) throw DomainError("raster payload must be finite");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

void put_f64(std::vector<std::byte> &out, double f) {
    if (!std::isfinite(f)) throw DomainError("raster payload must be finite");
    put_u64(out, std::bit_cast<std::uint64_t>(f));
}

template <typename T>
const std::vector<T> &expect(const RasterArray &a, const char *what) {
    if (const auto *v = std::get_if<std::vector<T>>(&a.values)) return *v;
    throw RasterError(RasterError::Code::unsupported_dtype, std::string("raster dtype is not ") + what);
}

void expect_2d(const RasterArray &a) {
    if (a.dims.size() != 2 || a.dims[0] == 0 || a.dims[1] == 0) {
        throw RasterError(RasterError::Code::shape, "expected a non-empty 2-D raster");
    }
}

} // namespace

std::size_t dtype_size(DType t) {
    switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::u8: return 1;
    }
    throw RasterError(RasterError::Code::unsupported_dtype, "unknown dtype");
}

std::size_t RasterArray::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
}

std::vector<std::byte> encode_raster(const RasterArray &a) {
    if (a.dims.size() > 255) throw RasterError(RasterError::Code::shape, "too many dimensions");
    const std::size_t count = a.element_count();
    const std::size_t stored = std::visit([](const auto &v) { return v.size(); }, a.values);
    if (count != stored) {
        throw RasterError(RasterError::Code::shape, "raster dims do not match element count");
    }

    std::vector<std::byte> out;
    out.reserve(kRasterHeaderFixed + 4 * a.dims.size() + count * dtype_size(a.dtype()));
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put_u16(out, kRasterVersion);
    out.push_back(static_cast<std::byte>(a.dtype()));
    out.push_back(static_cast<std::byte>(a.dims.size()));
    for (std::uint32_t d : a.dims) put_u32(out, d);

    switch (a.dtype()) {
    case DType::f32:
        for (float f : std::get<0>(a.values)) put_f32(out, f);
        break;
    case DType::f64:
        for (double f : std::get<1>(a.values)) put_f64(out, f);
        break;
    case DType::c64:
        for (const auto &z : std::get<2>(a.values)) {
            put_f32(out, z.real());
            put_f32(out, z.imag());
        }
        break;
    case DType::u8:
        for (std::uint8_t b : std::get<3>(a.values)) out.push_back(static_cast<std::byte>(b));
        break;
    }
    return out;
}

RasterArray decode_raster(std::span<const std::byte> bytes) {
    using Code = RasterError::Code;
    if (bytes.size() < kRasterHeaderFixed) throw RasterError(Code::truncated, "raster header truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw RasterError(Code::bad_magic, "bad raster magic");
    const auto version = static_cast<std::uint16_t>(std::to_integer<unsigned>(bytes[4]) |
                                                    (std::to_integer<unsigned>(bytes[5]) << 8));
    if (version != kRasterVersion) {
        throw RasterError(Code::bad_version, "unsupported raster version " + std::to_string(version));
    }
    const unsigned code = std::to_integer<unsigned>(bytes[6]);
    if (code > 3) throw RasterError(Code::unsupported_dtype, "unsupported dtype code " + std::to_string(code));
    const auto dtype = static_cast<DType>(code);
    const std::size_t ndim = std::to_integer<std::size_t>(bytes[7]);

    std::size_t offset = kRasterHeaderFixed;
    if (bytes.size() < offset + 4 * ndim) throw RasterError(Code::truncated, "raster dims truncated");

    RasterArray a;
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        a.dims.push_back(get_u32(bytes.data() + offset));
        count *= a.dims.back();
        offset += 4;
    }

    const std::size_t need = count * dtype_size(dtype);
    const std::size_t have = bytes.size() - offset;
    if (have < need) {
        throw RasterError(Code::truncated, "raster payload truncated: expected " + std::to_string(need) +
                                               " bytes, found " + std::to_string(have));
    }
    if (have > need) throw RasterError(Code::trailing_bytes, "raster payload has trailing bytes");

    const std::byte *p = bytes.data() + offset;
    switch (dtype) {
    case DType::f32: {
        std::vector<float> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<float>(get_u32(p + 4 * i));
        a.values = std::move(v);
        break;
    }
    case DType::f64: {
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<double>(get_u64(p + 8 * i));
        a.values = std::move(v);
        break;
    }
    case DType::c64: {
        std::vector<std::complex<float>> v(count);
        for (std::size_t i = 0; i < count; ++i) {
            v[i] = {std::bit_cast<float>(get_u32(p + 8 * i)), std::bit_cast<float>(get_u32(p + 8 * i + 4))};
        }
        a.values = std::move(v);
        break;
    }
    case DType::u8: {
        std::vector<std::uint8_t> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = std::to_integer<std::uint8_t>(p[i]);
        a.values = std::move(v);
        break;
    }
    }
    return a;
}

RasterArray read_raster(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RasterError(RasterError::Code::io, "cannot open raster '" + path.string() + "'");
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto *b = reinterpret_cast<const std::byte *>(raw.data());
    try {
        return decode_raster(std::span<const std::byte>(b, raw.size()));
    } catch (const RasterError &e) {
        throw RasterError(e.code(), path.string() + ": " + e.what());
    }
}

void write_raster(const RasterArray &array, const std::filesystem::path &path) {
    const auto bytes = encode_raster(array);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RasterError(RasterError::Code::io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RasterError(RasterError::Code::io, "write failed for '" + path.string() + "'");
}

namespace {
std::vector<std::uint32_t> dims2(std::size_t r, std::size_t c) {
    constexpr auto lim = std::numeric_limits<std::uint32_t>::max();
    if (r > lim || c > lim) throw RasterError(RasterError::Code::shape, "dimension exceeds u32 range");
    return {static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
}
} // namespace

RasterArray to_raster(const Image &img, DType dtype) {
    RasterArray a;
    a.dims = dims2(img.rows(), img.cols());
    if (dtype == DType::f32) {
        std::vector<float> v(img.size());
        for (std::size_t i = 0; i < img.size(); ++i) v[i] = static_cast<float>(img[i]);
        a.values = std::move(v);
    } else if (dtype == DType::f64) {
        a.values = img.vec();
    } else {
        throw RasterError(RasterError::Code::unsupported_dtype, "images are stored as f32 or f64");
    }
    return a;
}

RasterArray to_raster(const ComplexImage &img) {
    RasterArray a;
    a.dims = dims2(img.rows(), img.cols());
    std::vector<std::complex<float>> v(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) v[i] = std::complex<float>(img[i]);
    a.values = std::move(v);
    return a;
}

RasterArray to_raster(const Mask &mask) {
    RasterArray a;
    a.dims = dims2(mask.rows(), mask.cols());
    a.values = mask.vec();
    return a;
}

RasterArray to_raster(const SpectralFrame &frame) {
    RasterArray a;
    a.dims = dims2(frame.n_k, frame.n_x);
    std::vector<std::complex<float>> v(frame.data.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::complex<float>(frame.data[i]);
    a.values = std::move(v);
    return a;
}

Image image_from_raster(const RasterArray &a) {
    expect_2d(a);
    Image img(a.dims[0], a.dims[1]);
    if (a.dtype() == DType::f32) {
        const auto &v = std::get<0>(a.values);
        for (std::size_t i = 0; i < v.size(); ++i) img[i] = v[i];
    } else {
        img.vec() = expect<double>(a, "f32/f64");
    }
    return img;
}

ComplexImage complex_from_raster(const RasterArray &a) {
    expect_2d(a);
    const auto &v = expect<std::complex<float>>(a, "c64");
    ComplexImage img(a.dims[0], a.dims[1]);
    for (std::size_t i = 0; i < v.size(); ++i) img[i] = cplx(v[i]);
    return img;
}

Mask mask_from_raster(const RasterArray &a) {
    expect_2d(a);
    const auto &v = expect<std::uint8_t>(a, "u8");
    Mask m(a.dims[0], a.dims[1]);
    m.vec() = v;
    return m;
}

SpectralFrame spectral_from_raster(const RasterArray &a, double k_min, double k_max, double pitch) {
    expect_2d(a);
    const auto &v = expect<std::complex<float>>(a, "c64");
    SpectralFrame f(a.dims[0], a.dims[1], k_min, k_max, pitch);
    for (std::size_t i = 0; i < v.size(); ++i) f.data[i] = cplx(v[i]);
    return f;
}

std::vector<RasterArray> split_frames(const RasterArray &a) {
    if (a.dims.size() == 2) return {a};
    if (a.dims.size() != 3) throw RasterError(RasterError::Code::shape, "expected a 2-D image or 3-D stack");
    const std::size_t n = a.dims[0], slice = std::size_t{a.dims[1]} * a.dims[2];
    std::vector<RasterArray> out(n);
    std::visit(
        [&](const auto &v) {
            using V = std::decay_t<decltype(v)>;
            for (std::size_t t = 0; t < n; ++t) {
                out[t].dims = {a.dims[1], a.dims[2]};
                out[t].values = V(v.begin() + static_cast<std::ptrdiff_t>(t * slice),
                                  v.begin() + static_cast<std::ptrdiff_t>((t + 1) * slice));
            }
        },
        a.values);
    return out;
}

RasterArray stack_frames(const std::vector<RasterArray> &slices) {
    if (slices.empty()) throw RasterError(RasterError::Code::shape, "cannot stack zero frames");
    const RasterArray &first = slices.front();
    if (first.dims.size() != 2) throw RasterError(RasterError::Code::shape, "stack slices must be 2-D");
    RasterArray out;
    out.dims = {static_cast<std::uint32_t>(slices.size()), first.dims[0], first.dims[1]};
    out.values = first.values;
    std::visit(
        [&](auto &dst) {
            using V = std::decay_t<decltype(dst)>;
            for (std::size_t t = 1; t < slices.size(); ++t) {
                if (slices[t].dims != first.dims || slices[t].dtype() != first.dtype()) {
                    throw RasterError(RasterError::Code::shape, "stack slices differ in shape or dtype");
                }
                const V &src = std::get<V>(slices[t].values);
                dst.insert(dst.end(), src.begin(), src.end());
            }
        },
        out.values);
    return out;
}

void write_field(const DisplacementField &field, const std::string &prefix) {
    field.validate();
    RasterArray ax, lat, mask;
    ax.dims = lat.dims = mask.dims = dims2(field.rows, field.cols);
    ax.values = field.axial;
    lat.values = field.lateral;
    mask.values = field.valid;
    write_raster(ax, prefix + "_axial.ocer");
    write_raster(lat, prefix + "_lateral.ocer");
    write_raster(mask, prefix + "_mask.ocer");
}

DisplacementField read_field(const std::string &prefix) {
    const Image ax = image_from_raster(read_raster(prefix + "_axial.ocer"));
    const Image lat = image_from_raster(read_raster(prefix + "_lateral.ocer"));
    if (!ax.geometry().same_shape(lat.geometry())) {
        throw RasterError(RasterError::Code::shape, "field planes differ in shape: " + prefix);
    }
    DisplacementField f(ax.rows(), ax.cols());
    f.axial = ax.vec();
    f.lateral = lat.vec();
    const std::string mask_path = prefix + "_mask.ocer";
    if (std::filesystem::exists(mask_path)) {
        const Mask m = mask_from_raster(read_raster(mask_path));
        if (!m.geometry().same_shape(ax.geometry())) {
            throw RasterError(RasterError::Code::shape, "field mask differs in shape: " + prefix);
        }
        f.valid = m.vec();
    }
    f.validate();
    return f;
}

} // namespace oce
