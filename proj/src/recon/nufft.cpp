#include "oce/recon/nufft.hpp"

#include <cmath>
#include <numbers>

#include "oce/core/fft.hpp"

namespace oce::recon {

using std::numbers::pi;

double kaiser_bessel_beta(int width, double oversampling) {
    const double w = static_cast<double>(width);
    const double s = oversampling;
    const double arg = (w / s) * (w / s) * (s - 0.5) * (s - 0.5) - 0.8;
    if (!(arg > 0.0)) throw DomainError("Kaiser-Bessel beta undefined for this width/oversampling");
    return pi * std::sqrt(arg);
}

double kaiser_bessel(double x, int width, double beta) {
    const double u = 2.0 * x / static_cast<double>(width);
    if (std::abs(u) > 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u));
}

double kaiser_bessel_ft(double nu, int width, double beta) {
    const double w = static_cast<double>(width);
    const double a = pi * w * nu;
    const double d = beta * beta - a * a;
    if (d > 0.0) {
        const double s = std::sqrt(d);
        return w * std::sinh(s) / s;
    }
    if (d < 0.0) {
        const double s = std::sqrt(-d);
        return w * std::sin(s) / s;
    }
    return w;
}

GriddingNufft::GriddingNufft(std::size_t period, std::ptrdiff_t first, std::size_t count, NufftOptions opts)
    : period_(period), first_(first), count_(count), width_(opts.kernel_width) {
    if (period < 2) throw DomainError("nufft period must be >= 2");
    if (opts.oversampling < 1.25) throw DomainError("nufft oversampling must be >= 1.25");
    if (width_ < 4 || width_ % 2 != 0) throw DomainError("nufft kernel width must be even and >= 4");
    if (count > period) throw DomainError("nufft: more outputs than the period");
    // Outputs are evaluated on a window centred at zero frequency; the shift is
    // applied to the strengths as a modulation. This keeps the deapodisation
    // away from the band edge where aliasing is largest.
    shift_ = first + static_cast<std::ptrdiff_t>(count / 2);

    std::size_t grid = static_cast<std::size_t>(std::ceil(opts.oversampling * static_cast<double>(period)));
    grid += grid % 2;
    grid_ = fft::next_fast_size(grid);
    while (grid_ % 2 != 0) grid_ = fft::next_fast_size(grid_ + 1);

    const double sigma = static_cast<double>(grid_) / static_cast<double>(period);
    beta_ = opts.kernel_beta > 0.0 ? opts.kernel_beta : kaiser_bessel_beta(width_, sigma);

    deapod_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = static_cast<double>(first + static_cast<std::ptrdiff_t>(i) - shift_);
        deapod_[i] = 1.0 / kaiser_bessel_ft(r / static_cast<double>(grid_), width_, beta_);
    }
}

void GriddingNufft::execute(std::span<const double> positions, std::span<const cplx> strengths,
                            std::span<cplx> out) const {
    if (positions.size() != strengths.size()) throw ShapeError("nufft: positions/strengths size mismatch");
    if (out.size() != count_) throw ShapeError("nufft: output size mismatch");

    const auto m = static_cast<std::ptrdiff_t>(grid_);
    const double scale = static_cast<double>(grid_) / static_cast<double>(period_);
    const double half_width = 0.5 * static_cast<double>(width_);
    std::vector<cplx> grid(grid_, cplx{});

    const double shift_phase = 2.0 * pi * static_cast<double>(shift_) / static_cast<double>(period_);
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (strengths[j] == cplx{}) continue;
        const cplx c = shift_ == 0 ? strengths[j] : strengths[j] * std::polar(1.0, shift_phase * positions[j]);
        const double tau = positions[j] * scale;
        const auto lo = static_cast<std::ptrdiff_t>(std::ceil(tau - half_width));
        const auto hi = static_cast<std::ptrdiff_t>(std::floor(tau + half_width));
        for (std::ptrdiff_t l = lo; l <= hi; ++l) {
            const double w = kaiser_bessel(static_cast<double>(l) - tau, width_, beta_);
            grid[static_cast<std::size_t>(((l % m) + m) % m)] += c * w;
        }
    }

    fft::transform(grid, fft::Direction::backward);

    for (std::size_t i = 0; i < count_; ++i) {
        const std::ptrdiff_t r = first_ + static_cast<std::ptrdiff_t>(i) - shift_;
        out[i] = grid[static_cast<std::size_t>(((r % m) + m) % m)] * deapod_[i];
    }
}

} // namespace oce::recon
