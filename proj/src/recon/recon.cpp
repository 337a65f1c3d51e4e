#include "oce/recon/recon.hpp"

#include <cmath>
#include <numbers>

#include "oce/core/fft.hpp"
#include "oce/core/parallel.hpp"

namespace oce::recon {

using std::numbers::pi;

namespace {

std::vector<cplx> delay_domain(const SpectralFrame &frame) {
    std::vector<cplx> buf = frame.data;
    fft::transform_cols(buf, frame.n_k, frame.n_x, fft::Direction::backward);
    const double inv = 1.0 / static_cast<double>(frame.n_k);
    for (cplx &z : buf) z *= inv;
    return buf;
}

} // namespace

ComplexImage reconstruct_ifft(const SpectralFrame &frame) {
    frame.validate();
    if (frame.n_k % 2 != 0) throw DomainError("reconstruct_ifft: n_k must be even");
    const std::vector<cplx> full = delay_domain(frame);
    const std::size_t rows = frame.n_k / 2;
    ComplexImage img(Geometry{rows, frame.n_x, frame.depth_pitch(), frame.pitch_lateral});
    std::copy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(rows * frame.n_x), img.data().begin());
    return img;
}

SpectralFrame suppress_negative_delay(const SpectralFrame &frame, std::size_t guard_rows) {
    frame.validate();
    const std::size_t n = frame.n_k;
    if (guard_rows >= n / 2) throw DomainError("suppress_negative_delay: guard_rows must be < n_k/2");
    std::vector<cplx> full = delay_domain(frame);
    // Rows [ceil(n/2), n - guard) hold delays -n/2 .. -(guard+1).
    for (std::size_t r = (n + 1) / 2; r < n - guard_rows; ++r) {
        std::fill_n(full.begin() + static_cast<std::ptrdiff_t>(r * frame.n_x), frame.n_x, cplx{});
    }
    fft::transform_cols(full, n, frame.n_x, fft::Direction::forward);
    SpectralFrame out = frame;
    out.data = std::move(full);
    return out;
}

IsamConfig IsamConfig::for_frame(const SpectralFrame &frame, std::size_t focus_row) {
    IsamConfig cfg;
    cfg.k_min = frame.k_min;
    cfg.k_max = frame.k_max;
    cfg.focus_row = focus_row;
    return cfg;
}

void IsamConfig::validate() const {
    if (!(k_min > 0.0) || !(k_max > k_min)) throw DomainError("isam: degenerate wavenumber range");
    if (nufft_oversampling < 1.25) throw DomainError("isam: nufft_oversampling must be >= 1.25");
    if (kernel_width < 4 || kernel_width % 2 != 0) throw DomainError("isam: kernel_width must be even and >= 4");
}

ComplexImage isam_resample(const SpectralFrame &frame, const IsamConfig &cfg) {
    frame.validate();
    cfg.validate();
    if (frame.n_k % 2 != 0 || frame.n_k < 4) throw DomainError("isam: n_k must be even and >= 4");
    if (std::abs(frame.k_min - cfg.k_min) > 1e-12 * cfg.k_max ||
        std::abs(frame.k_max - cfg.k_max) > 1e-12 * cfg.k_max) {
        throw DomainError("isam: config wavenumber range does not match the frame");
    }
    const std::size_t n = frame.n_k;
    const std::size_t nx = frame.n_x;
    const std::size_t rows = n / 2;
    if (cfg.focus_row >= rows) throw DomainError("isam: focus_row outside the output raster");

    const double dk = frame.dk();
    const double dz = frame.depth_pitch();
    const double z_focus = static_cast<double>(cfg.focus_row) * dz;

    // Lateral spectrum per wavenumber.
    std::vector<cplx> spec = frame.data;
    fft::transform_rows(spec, n, nx, fft::Direction::forward);

    NufftOptions opts;
    opts.oversampling = cfg.nufft_oversampling;
    opts.kernel_width = cfg.kernel_width;
    opts.kernel_beta = cfg.kernel_beta;
    const GriddingNufft nufft(n, 0, rows, opts);

    std::vector<cplx> out(rows * nx);
    const double inv_n = 1.0 / static_cast<double>(n);
    parallel_for(nx, [&](std::size_t m) {
        const double m_signed = m <= nx / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(nx);
        const double qx = 2.0 * pi * m_signed / (static_cast<double>(nx) * frame.pitch_lateral);
        std::vector<double> pos(n);
        std::vector<cplx> str(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double k = frame.k_at(j);
            const double q2 = 4.0 * k * k - qx * qx;
            if (!(q2 > 0.0)) {
                pos[j] = 0.0;
                str[j] = cplx{};
                continue;
            }
            const double qz = std::sqrt(q2);
            pos[j] = (qz - 2.0 * frame.k_min) / (2.0 * dk);
            // Jacobian dq_z/dk normalised to 1 at q_x = 0; the phase re-centres
            // the dispersion relation on the focal plane.
            const double jac = 2.0 * k / qz;
            str[j] = spec[j * nx + m] * (jac * inv_n) * std::polar(1.0, (2.0 * k - qz) * z_focus);
        }
        std::vector<cplx> col(rows);
        nufft.execute(pos, str, col);
        for (std::size_t r = 0; r < rows; ++r) out[r * nx + m] = col[r];
    });

    fft::transform_rows(out, rows, nx, fft::Direction::backward);
    const double inv_nx = 1.0 / static_cast<double>(nx);
    for (cplx &z : out) z *= inv_nx;
    return ComplexImage(Geometry{rows, nx, dz, frame.pitch_lateral}, std::move(out));
}

} // namespace oce::recon
