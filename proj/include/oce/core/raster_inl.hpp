#pragma once

#include <algorithm>
#include <cmath>

namespace oce {

namespace detail {
inline double lerp_exact(double a, double b, double t) { return a + t * (b - a); }

inline void clamp_cell(double pos, std::size_t n, std::size_t &i0, double &frac) {
    const double hi = static_cast<double>(n - 1);
    if (!(pos > 0.0)) {
        i0 = 0;
        frac = 0.0;
        return;
    }
    if (pos >= hi) {
        i0 = n - 1;
        frac = 0.0;
        return;
    }
    const double f = std::floor(pos);
    i0 = static_cast<std::size_t>(f);
    frac = pos - f;
}
} // namespace detail

template <typename Fetch>
double bilinear_clamped(std::size_t rows, std::size_t cols, double r, double c, Fetch &&at) {
    std::size_t r0 = 0, c0 = 0;
    double fr = 0.0, fc = 0.0;
    detail::clamp_cell(r, rows, r0, fr);
    detail::clamp_cell(c, cols, c0, fc);
    const std::size_t r1 = std::min(r0 + 1, rows - 1);
    const std::size_t c1 = std::min(c0 + 1, cols - 1);
    const double top = detail::lerp_exact(at(r0, c0), at(r0, c1), fc);
    const double bot = detail::lerp_exact(at(r1, c0), at(r1, c1), fc);
    return detail::lerp_exact(top, bot, fr);
}

} // namespace oce
