#include <cmath>

#include "oce/flow/flow.hpp"

namespace oce::flow {

namespace {

constexpr double kClamp = 0.99;

double clamp_offset(double d, bool &clamped) {
    if (!std::isfinite(d)) {
        clamped = true;
        return 0.0;
    }
    if (std::abs(d) >= 1.0) {
        clamped = true;
        return d > 0.0 ? kClamp : -kClamp;
    }
    return d;
}

// Three-point vertex; nullopt when the samples do not bracket a maximum.
std::optional<double> three_point(double m, double c, double p) {
    const double den = 2.0 * m - 4.0 * c + 2.0 * p;
    if (!(den < 0.0)) return std::nullopt;
    return (m - p) / den;
}

std::optional<double> gauss_1d(double m, double c, double p) {
    if (!(m > 0.0 && c > 0.0 && p > 0.0)) return std::nullopt;
    return three_point(std::log(m), std::log(c), std::log(p));
}

// Least-squares fit of ln C = a + b z + c x + d z^2 + e x^2 + f z x on the 3x3 lattice.
std::optional<std::array<double, 2>> gauss_2d(const std::array<std::array<double, 3>, 3> &v) {
    double s0 = 0, sz = 0, sx = 0, szz = 0, sxx = 0, szx = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (!(v[i][j] > 0.0)) return std::nullopt;
            const double l = std::log(v[i][j]);
            const double z = i - 1, x = j - 1;
            s0 += l;
            sz += z * l;
            sx += x * l;
            szz += z * z * l;
            sxx += x * x * l;
            szx += z * x * l;
        }
    }
    const double b = sz / 6.0;
    const double c = sx / 6.0;
    const double f = szx / 4.0;
    const double u = 0.5 * (szz + sxx) - 2.0 * s0 / 3.0;
    const double d = 0.5 * (u + 0.5 * (szz - sxx));
    const double e = 0.5 * (u - 0.5 * (szz - sxx));
    const double det = 4.0 * d * e - f * f;
    if (!(d < 0.0) || !(det > 0.0)) return std::nullopt;
    // Stationary point of the quadratic: [2d f; f 2e] [z x]^T = -[b c]^T.
    const double z = (-b * 2.0 * e + c * f) / det;
    const double x = (-c * 2.0 * d + b * f) / det;
    return std::array<double, 2>{z, x};
}

} // namespace

double subpixel_peak_1d(double minus, double centre, double plus, PeakFit method, bool &clamped) {
    std::optional<double> d;
    if (method != PeakFit::parabolic) d = gauss_1d(minus, centre, plus);
    if (!d) d = three_point(minus, centre, plus);
    if (!d) return 0.0;
    return clamp_offset(*d, clamped);
}

SubpixelResult subpixel_peak(const std::array<std::array<double, 3>, 3> &c, PeakFit method) {
    SubpixelResult res;
    if (method == PeakFit::gauss2d) {
        if (auto p = gauss_2d(c)) {
            res.used = PeakFit::gauss2d;
            res.axial = clamp_offset((*p)[0], res.clamped);
            res.lateral = clamp_offset((*p)[1], res.clamped);
            return res;
        }
    }
    if (method != PeakFit::parabolic) {
        const auto a = gauss_1d(c[0][1], c[1][1], c[2][1]);
        const auto l = gauss_1d(c[1][0], c[1][1], c[1][2]);
        if (a && l) {
            res.used = PeakFit::gauss1x1d;
            res.axial = clamp_offset(*a, res.clamped);
            res.lateral = clamp_offset(*l, res.clamped);
            return res;
        }
    }
    res.used = PeakFit::parabolic;
    const auto a = three_point(c[0][1], c[1][1], c[2][1]);
    const auto l = three_point(c[1][0], c[1][1], c[1][2]);
    res.axial = a ? clamp_offset(*a, res.clamped) : 0.0;
    res.lateral = l ? clamp_offset(*l, res.clamped) : 0.0;
    return res;
}

} // namespace oce::flow
