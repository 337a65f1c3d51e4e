#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oce/phantom/phantom.hpp"
#include "oce/recon/recon.hpp"
#include "oracles.hpp"

using namespace oce;
using namespace oce::phantom;

namespace {

std::vector<double> lateral_magnitude(const ComplexImage &img, std::size_t row) {
    std::vector<double> p(img.cols());
    for (std::size_t c = 0; c < img.cols(); ++c) p[c] = std::abs(img(row, c));
    return p;
}

double energy(const ComplexImage &img) {
    double e = 0.0;
    for (const cplx &z : img.vec()) e += std::norm(z);
    return e;
}

PhantomSpec small_spec() {
    PhantomSpec s;
    s.rows = 64;
    s.cols = 64;
    s.n_scatterers = 400;
    s.focus_row = 32;
    s.seed = 9;
    return s;
}

} // namespace

TEST_CASE("make_scene: empty, deterministic, and uniform") {
    PhantomSpec s = small_spec();
    s.n_scatterers = 0;
    CHECK(make_scene(s).empty());

    s = small_spec();
    const auto a = make_scene(s);
    const auto b = make_scene(s);
    REQUIRE(a.size() == s.n_scatterers);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].row == b[i].row);
        CHECK(a[i].col == b[i].col);
        CHECK(a[i].phase == b[i].phase);
        CHECK(a[i].reflectivity >= s.reflectivity_min);
        CHECK(a[i].reflectivity <= s.reflectivity_max);
    }

    // Chi-square on an 8x8 histogram; 63 degrees of freedom, p = 0.01 critical value 92.01.
    PhantomSpec u;
    u.rows = 256;
    u.cols = 256;
    u.n_scatterers = 1000;
    u.seed = 4;
    std::vector<double> counts(64, 0.0);
    for (const Scatterer &sc : make_scene(u)) {
        REQUIRE(sc.row >= 0.0);
        REQUIRE(sc.row < 256.0);
        REQUIRE(sc.col >= 0.0);
        REQUIRE(sc.col < 256.0);
        counts[static_cast<std::size_t>(sc.row / 32.0) * 8 + static_cast<std::size_t>(sc.col / 32.0)] += 1.0;
    }
    const double expected = 1000.0 / 64.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 92.01);
}

TEST_CASE("render_complex: in-focus FWHM matches the PSF and defocus widens it") {
    PhantomSpec s = small_spec();
    s.psf_sigma_lateral = 3.0;
    s.defocus_rate = 0.3;
    const std::vector<Scatterer> at_focus{{32.0, 32.0, 1.0, 0.4}};
    const double w = oracle::fwhm(lateral_magnitude(render_complex(at_focus, s), 32));
    CHECK(w == doctest::Approx(2.3548 * 3.0).epsilon(0.05));

    const std::vector<Scatterer> off_focus{{52.0, 32.0, 1.0, 0.4}};
    const double w_off = oracle::fwhm(lateral_magnitude(render_complex(off_focus, s), 52));
    CHECK(w_off > w * 1.05);
}

TEST_CASE("render_complex: energy adds for separated scatterers and scales with reflectivity") {
    PhantomSpec s = small_spec();
    const std::vector<Scatterer> one{{20.0, 20.0, 1.0, 0.0}};
    const std::vector<Scatterer> two{{20.0, 20.0, 1.0, 0.0}, {44.0, 44.0, 1.0, 1.0}};
    const double e1 = energy(render_complex(one, s));
    CHECK(energy(render_complex(two, s)) == doctest::Approx(2.0 * e1).epsilon(0.01));

    auto scene = make_scene(s);
    const ComplexImage base = render_complex(scene, s);
    for (auto &sc : scene) sc.reflectivity *= 2.5;
    const ComplexImage scaled = render_complex(scene, s);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(scaled[i] - 2.5 * base[i]) < 1e-12);
}

TEST_CASE("synthesize_spectrum: delta, zero image and round trip through reconstruct_ifft") {
    ComplexImage delta(16, 4);
    delta(0, 2) = 1.0;
    const SpectralFrame sd = synthesize_spectrum(delta, 32, 7.0, 9.0);
    for (std::size_t k = 0; k < 32; ++k) CHECK(std::abs(sd(k, 2)) == doctest::Approx(1.0));

    const SpectralFrame sz = synthesize_spectrum(ComplexImage(16, 4), 32, 7.0, 9.0);
    for (const cplx &z : sz.data) CHECK(z == cplx(0.0, 0.0));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexImage img(64, 32);
    for (auto &z : img.vec()) z = cplx(n(rng), n(rng));
    const ComplexImage back = recon::reconstruct_ifft(synthesize_spectrum(img, 128, 7.0, 9.0));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        num += std::norm(back[i] - img[i]);
        den += std::norm(img[i]);
    }
    CHECK(std::sqrt(num / den) < 1e-6);

    CHECK_THROWS_AS(synthesize_spectrum(img, 32, 7.0, 9.0), ShapeError);
}

TEST_CASE("make_motion: uniform, zero compression and compression profile") {
    MotionSpec m;
    m.step_px = 2.5;
    m.n_frames = 5;
    const auto uni = make_motion(m, 20, 30);
    REQUIRE(uni.size() == 4);
    for (const auto &f : uni) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f.axial[i] == 0.0);
            CHECK(f.lateral[i] == 2.5);
            CHECK(f.valid[i] == 1);
        }
    }

    MotionSpec c;
    c.kind = MotionKind::smooth_compression;
    c.compression_peak = 0.0;
    for (const auto &f : make_motion(c, 40, 40)) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f.axial[i] == 0.0);
            CHECK(f.lateral[i] == 0.0);
        }
    }

    c.compression_peak = 2.0;
    c.width_px = 30.0;
    const std::size_t rows = 128, cols = 128;
    const auto comp = make_motion(c, rows, cols);
    const auto &f = comp.front();
    double peak = 0.0, grad = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t col = 0; col < cols; ++col) {
            const std::size_t p = f.index(r, col);
            peak = std::max(peak, std::abs(f.axial[p]));
            if (r + 1 < rows) {
                grad = std::max(grad, std::abs(f.axial[p + cols] - f.axial[p]));
                grad = std::max(grad, std::abs(f.lateral[p + cols] - f.lateral[p]));
            }
            if (col + 1 < cols) {
                grad = std::max(grad, std::abs(f.axial[p + 1] - f.axial[p]));
                grad = std::max(grad, std::abs(f.lateral[p + 1] - f.lateral[p]));
            }
        }
    }
    CHECK(std::abs(peak - 2.0) < 1e-9);
    // One-pixel differences stay within peak / width plus the depth decay rate.
    CHECK(grad <= 2.0 / 30.0 + 2.0 * 3.141592653589793 / static_cast<double>(rows - 1));
}

TEST_CASE("warp_scene_sequence: static scene, determinism and noise level") {
    PhantomSpec s = small_spec();
    const auto scene = make_scene(s);
    MotionSpec still;
    still.step_px = 0.0;
    still.n_frames = 3;
    const auto seq = warp_scene_sequence(scene, s, still, NoiseSpec{});
    CHECK(seq.clean[0] == seq.clean[1]);
    CHECK(seq.noisy[2] == seq.clean[0]);
    double peak = 0.0;
    for (const cplx &z : seq.clean[0].vec()) peak = std::max(peak, std::abs(z));
    CHECK(peak == doctest::Approx(1.0));

    MotionSpec moving;
    moving.step_px = 1.5;
    moving.n_frames = 3;
    NoiseSpec nz;
    nz.sigma = 0.05;
    const auto a = warp_scene_sequence(scene, s, moving, nz);
    const auto b = warp_scene_sequence(scene, s, moving, nz);
    for (std::size_t t = 0; t < 3; ++t) CHECK(a.noisy[t] == b.noisy[t]);

    // Complex noise: E|n|^2 = sigma^2. Pooled over 16x16 pixels and 100 draws.
    const std::size_t n_px = 256, draws = 100;
    double sum_sq = 0.0;
    std::vector<cplx> mean(n_px, 0.0);
    std::vector<std::vector<cplx>> samples(draws, std::vector<cplx>(n_px));
    for (std::size_t d = 0; d < draws; ++d) {
        ComplexImage img(16, 16);
        add_complex_noise(img, 0.1, 1000 + d);
        for (std::size_t i = 0; i < n_px; ++i) {
            samples[d][i] = img[i];
            mean[i] += img[i] / static_cast<double>(draws);
        }
    }
    for (std::size_t d = 0; d < draws; ++d)
        for (std::size_t i = 0; i < n_px; ++i) sum_sq += std::norm(samples[d][i] - mean[i]);
    const double sd = std::sqrt(sum_sq / static_cast<double>(n_px * (draws - 1)));
    CHECK(sd == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("warp_scene_sequence: integer lateral motion shows as an NCC peak at 3t") {
    PhantomSpec s = small_spec();
    s.rows = 48;
    s.cols = 96;
    s.n_scatterers = 1500;
    MotionSpec m;
    m.step_px = 3.0;
    m.n_frames = 3;
    const auto seq = warp_scene_sequence(make_scene(s), s, m, NoiseSpec{});
    Image f0(48, 96), ft(48, 96);
    for (std::size_t t = 1; t < 3; ++t) {
        for (std::size_t i = 0; i < f0.size(); ++i) {
            f0[i] = std::abs(seq.clean[0][i]);
            ft[i] = std::abs(seq.clean[t][i]);
        }
        long best = -100;
        double best_v = -2.0;
        for (long shift = -2; shift <= 10; ++shift) {
            const double v = oracle::direct_zncc(f0, ft, 4, 20, 4, 20 + shift, 40);
            if (v > best_v) {
                best_v = v;
                best = shift;
            }
        }
        CHECK(best == static_cast<long>(3 * t));
        CHECK(best_v > 0.99);
    }
}

TEST_CASE("ground truth to reference agrees with the pairwise steps") {
    MotionSpec m;
    m.kind = MotionKind::smooth_compression;
    m.n_frames = 3;
    m.compression_peak = 1.5;
    m.width_px = 20.0;
    const std::size_t rows = 40, cols = 40;
    const auto pair = make_motion(m, rows, cols);
    // Forward two steps by hand at one point.
    double z = 10.0, x = 17.0, ua = 0.0, ul = 0.0;
    motion_step(m, rows, cols, z, x, ua, ul);
    z += ua;
    x += ul;
    motion_step(m, rows, cols, z, x, ua, ul);
    z += ua;
    x += ul;
    const auto d02 = ground_truth_to_reference(m, rows, cols, 0, 2);
    CHECK(d02.axial[d02.index(10, 17)] == doctest::Approx(z - 10.0).epsilon(1e-12));
    CHECK(d02.lateral[d02.index(10, 17)] == doctest::Approx(x - 17.0).epsilon(1e-12));
    // Backward: d_{1->0}(p) satisfies p + d = y with y + step(y) = p.
    const auto d10 = ground_truth_to_reference(m, rows, cols, 1, 0);
    const std::size_t p = d10.index(15, 22);
    const double yz = 15.0 + d10.axial[p], yx = 22.0 + d10.lateral[p];
    motion_step(m, rows, cols, yz, yx, ua, ul);
    CHECK(yz + ua == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(yx + ul == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(pair.size() == 2);
}

TEST_CASE("spec validation") {
    PhantomSpec s = small_spec();
    s.focus_row = 64;
    CHECK_THROWS_AS(make_scene(s), DomainError);
    s = small_spec();
    s.psf_sigma_axial = 0.0;
    CHECK_THROWS(make_scene(s));
    MotionSpec m;
    m.n_frames = 1;
    CHECK_THROWS(make_motion(m, 8, 8));
    NoiseSpec n;
    n.sigma = -1.0;
    CHECK_THROWS(n.validate());
}
