#include <algorithm>
#include <cmath>

#include "oce/core/fft.hpp"
#include "oce/flow/flow.hpp"

namespace oce::flow {

NccSurface ncc_surface(const Image &ref, const Image &mov, std::size_t r0, std::size_t c0, std::size_t window,
                       std::ptrdiff_t base_axial, std::ptrdiff_t base_lateral, std::size_t margin) {
    if (!ref.geometry().same_shape(mov.geometry())) throw ShapeError("ncc_surface: image shapes differ");
    if (r0 + window > ref.rows() || c0 + window > ref.cols()) throw ShapeError("ncc_surface: block outside image");

    const auto w = static_cast<std::ptrdiff_t>(window);
    const auto m = static_cast<std::ptrdiff_t>(margin);
    const auto R = static_cast<std::ptrdiff_t>(ref.rows());
    const auto C = static_cast<std::ptrdiff_t>(ref.cols());
    const auto pr = static_cast<std::ptrdiff_t>(r0);
    const auto pc = static_cast<std::ptrdiff_t>(c0);

    NccSurface s;
    // Absolute shift range, clipped so the mov window stays in the image.
    const std::ptrdiff_t a_lo = std::max(base_axial - m, -pr);
    const std::ptrdiff_t a_hi = std::min(base_axial + m, R - w - pr);
    const std::ptrdiff_t l_lo = std::max(base_lateral - m, -pc);
    const std::ptrdiff_t l_hi = std::min(base_lateral + m, C - w - pc);
    s.lo_axial = a_lo - base_axial;
    s.hi_axial = a_hi - base_axial;
    s.lo_lateral = l_lo - base_lateral;
    s.hi_lateral = l_hi - base_lateral;
    if (a_lo > a_hi || l_lo > l_hi) {
        s.hi_axial = s.lo_axial - 1;
        s.hi_lateral = s.lo_lateral - 1;
        return s;
    }

    const std::size_t na = static_cast<std::size_t>(a_hi - a_lo + 1);
    const std::size_t nl = static_cast<std::size_t>(l_hi - l_lo + 1);
    const std::size_t sa = na + window - 1;
    const std::size_t sl = nl + window - 1;
    const std::size_t P = fft::next_fast_size(sa);
    const std::size_t Q = fft::next_fast_size(sl);
    const double n = static_cast<double>(window * window);

    double ref_mean = 0.0;
    for (std::size_t i = 0; i < window; ++i)
        for (std::size_t j = 0; j < window; ++j) ref_mean += ref(r0 + i, c0 + j);
    ref_mean /= n;

    std::vector<cplx> a(P * Q, cplx{});
    double ref_energy = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        for (std::size_t j = 0; j < window; ++j) {
            const double v = ref(r0 + i, c0 + j) - ref_mean;
            a[i * Q + j] = v;
            ref_energy += v * v;
        }
    }

    const auto mr = static_cast<std::size_t>(pr + a_lo);
    const auto mc = static_cast<std::size_t>(pc + l_lo);
    double region_mean = 0.0;
    for (std::size_t i = 0; i < sa; ++i)
        for (std::size_t j = 0; j < sl; ++j) region_mean += mov(mr + i, mc + j);
    region_mean /= static_cast<double>(sa * sl);

    std::vector<cplx> b(P * Q, cplx{});
    // Summed-area tables of the mean-removed region and its square.
    std::vector<double> s1((sa + 1) * (sl + 1), 0.0), s2((sa + 1) * (sl + 1), 0.0);
    double region_sq = 0.0;
    for (std::size_t i = 0; i < sa; ++i) {
        for (std::size_t j = 0; j < sl; ++j) {
            const double v = mov(mr + i, mc + j) - region_mean;
            b[i * Q + j] = v;
            region_sq += v * v;
            s1[(i + 1) * (sl + 1) + j + 1] = v + s1[i * (sl + 1) + j + 1] + s1[(i + 1) * (sl + 1) + j] - s1[i * (sl + 1) + j];
            s2[(i + 1) * (sl + 1) + j + 1] =
                v * v + s2[i * (sl + 1) + j + 1] + s2[(i + 1) * (sl + 1) + j] - s2[i * (sl + 1) + j];
        }
    }

    s.values.assign(na * nl, 0.0);
    if (!(ref_energy > 1e-24 * n * ref_mean * ref_mean)) {
        s.degenerate_ref = true;
        return s;
    }

    fft::transform_2d(a, P, Q, fft::Direction::forward);
    fft::transform_2d(b, P, Q, fft::Direction::forward);
    for (std::size_t i = 0; i < a.size(); ++i) b[i] *= std::conj(a[i]);
    fft::transform_2d(b, P, Q, fft::Direction::backward);
    const double inv = 1.0 / static_cast<double>(P * Q);

    const double var_floor = 1e-13 * n * region_sq / static_cast<double>(sa * sl);
    auto box = [&](const std::vector<double> &t, std::size_t i, std::size_t j) {
        const std::size_t W = sl + 1;
        return t[(i + window) * W + j + window] - t[i * W + j + window] - t[(i + window) * W + j] + t[i * W + j];
    };
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nl; ++j) {
            const double sum = box(s1, i, j);
            const double var = box(s2, i, j) - sum * sum / n;
            if (!(var > var_floor) || !(var > 0.0)) continue;
            const double num = b[i * Q + j].real() * inv;
            s.values[i * nl + j] = std::clamp(num / std::sqrt(ref_energy * var), -1.0, 1.0);
        }
    }
    return s;
}

} // namespace oce::flow
