#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oce/core/log_compress.hpp"
#include "oce/flow/flow.hpp"
#include "oce/phantom/phantom.hpp"
#include "oracles.hpp"

using namespace oce;
using namespace oce::flow;

namespace {

using Nb = std::array<std::array<double, 3>, 3>;

Nb gaussian_nb(double pz, double px, double scale = 1.0) {
    Nb c{};
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            c[i + 1][j + 1] = scale * std::exp(-((i - pz) * (i - pz) + (j - px) * (j - px)));
    return c;
}

// mov(p + s) = ref(p) with wrap-around.
Image circular_shift(const Image &ref, long sa, long sl) {
    const long rows = static_cast<long>(ref.rows()), cols = static_cast<long>(ref.cols());
    Image mov(ref.rows(), ref.cols());
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c)
            mov(static_cast<std::size_t>(((r + sa) % rows + rows) % rows),
                static_cast<std::size_t>(((c + sl) % cols + cols) % cols)) = ref(static_cast<std::size_t>(r),
                                                                                    static_cast<std::size_t>(c));
    return mov;
}

DisplacementField restrict_interior(DisplacementField f, std::size_t m) {
    for (std::size_t r = 0; r < f.rows; ++r)
        for (std::size_t c = 0; c < f.cols; ++c)
            if (r < m || c < m || r + m >= f.rows || c + m >= f.cols) f.valid[r * f.cols + c] = 0;
    return f;
}

struct PhantomPair {
    Image ref, mov;
    DisplacementField truth;
};

PhantomPair phantom_pair(double step) {
    phantom::PhantomSpec s;
    s.rows = 256;
    s.cols = 256;
    s.margin = 40;
    s.n_scatterers = 20672;
    phantom::MotionSpec m;
    m.n_frames = 2;
    m.step_px = step;
    const auto seq = phantom::warp_scene_sequence(phantom::make_scene(s), s, m, phantom::NoiseSpec{});
    return {log_compress(seq.noisy[0], kDefaultFloorDb), log_compress(seq.noisy[1], kDefaultFloorDb),
            seq.fields[0]};
}

BlockGridField uniform_grid(std::size_t n, double a, double l) {
    BlockGridField g = make_block_grid(16 * n + 16, 16 * n + 16, 32, 16);
    for (BlockCell &c : g.cells) {
        c.du_axial = a;
        c.du_lateral = l;
        c.valid = true;
    }
    return g;
}

} // namespace

TEST_CASE("subpixel_peak: exact on Gaussian neighbourhoods") {
    const Nb sym = gaussian_nb(0.0, 0.0);
    const SubpixelResult s = subpixel_peak(sym, PeakFit::gauss2d);
    CHECK(std::abs(s.axial) < 1e-12);
    CHECK(std::abs(s.lateral) < 1e-12);

    const SubpixelResult r = subpixel_peak(gaussian_nb(0.3, -0.2), PeakFit::gauss2d);
    CHECK(r.axial == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(r.lateral == doctest::Approx(-0.2).epsilon(1e-9));
    CHECK(r.used == PeakFit::gauss2d);

    for (double pz = -0.45; pz <= 0.451; pz += 0.15)
        for (double px = -0.45; px <= 0.451; px += 0.15) {
            for (PeakFit m : {PeakFit::gauss2d, PeakFit::gauss1x1d}) {
                const SubpixelResult q = subpixel_peak(gaussian_nb(pz, px, 0.8), m);
                CHECK(std::abs(q.axial - pz) <= 1e-9);
                CHECK(std::abs(q.lateral - px) <= 1e-9);
                CHECK_FALSE(q.clamped);
            }
        }
}

TEST_CASE("subpixel_peak: a negative corner falls back to the three-point Gaussian") {
    Nb c = gaussian_nb(0.25, 0.1);
    c[0][2] = -0.05;
    const SubpixelResult r = subpixel_peak(c, PeakFit::gauss2d);
    CHECK(r.used == PeakFit::gauss1x1d);
    auto three_point = [](double m, double z, double p) {
        const double lm = std::log(m), l0 = std::log(z), lp = std::log(p);
        return (lm - lp) / (2.0 * lm - 4.0 * l0 + 2.0 * lp);
    };
    CHECK(r.axial == doctest::Approx(three_point(c[0][1], c[1][1], c[2][1])).epsilon(1e-12));
    CHECK(r.lateral == doctest::Approx(three_point(c[1][0], c[1][1], c[1][2])).epsilon(1e-12));

    // A non-positive axis sample forces the parabolic fit on that axis.
    Nb d = gaussian_nb(0.0, 0.0);
    d[1][0] = 0.0;
    const SubpixelResult p = subpixel_peak(d, PeakFit::gauss2d);
    CHECK(p.used == PeakFit::parabolic);
    const double m = d[1][0], z = d[1][1], q = d[1][2];
    CHECK(p.lateral == doctest::Approx((m - q) / (2.0 * m - 4.0 * z + 2.0 * q)).epsilon(1e-12));
}

TEST_CASE("subpixel_peak: offsets reaching one sample are clamped and flagged") {
    bool clamped = false;
    const double d = subpixel_peak_1d(1.5, 1.0, 0.0, PeakFit::parabolic, clamped);
    CHECK(d == doctest::Approx(-0.99));
    CHECK(clamped);
    clamped = false;
    CHECK(subpixel_peak_1d(0.5, 1.0, 0.5, PeakFit::gauss2d, clamped) == 0.0);
    CHECK_FALSE(clamped);

    Nb c = gaussian_nb(0.0, 0.0);
    c[1][2] = 2.0;
    const SubpixelResult r = subpixel_peak(c, PeakFit::gauss1x1d);
    CHECK(r.clamped);
    CHECK(std::abs(r.lateral) == doctest::Approx(0.99));
}

TEST_CASE("ncc_surface: FFT path equals direct sums on random 16x16 blocks") {
    const Image ref = oracle::random_image(64, 64, 11);
    const Image mov = oracle::random_image(64, 64, 12);
    double worst = 0.0;
    for (std::size_t r0 : {4u, 20u, 40u})
        for (std::size_t c0 : {3u, 24u, 44u}) {
            const NccSurface s = ncc_surface(ref, mov, r0, c0, 16, 1, -2, 4);
            for (std::ptrdiff_t a = s.lo_axial; a <= s.hi_axial; ++a)
                for (std::ptrdiff_t l = s.lo_lateral; l <= s.hi_lateral; ++l) {
                    const double d = oracle::direct_zncc(ref, mov, static_cast<long>(r0), static_cast<long>(c0),
                                                         static_cast<long>(r0) + 1 + a, static_cast<long>(c0) - 2 + l,
                                                         16);
                    worst = std::max(worst, std::abs(s.at(a, l) - d));
                }
        }
    CHECK(worst < 1e-9);
}

TEST_CASE("ncc_match_pass: identical images, integer shift, constant blocks") {
    const FlowConfig cfg;
    const Image img = oracle::random_image(128, 128, 3);
    const BlockGridField same = ncc_match_pass(img, img, 32, 16, 6, cfg);
    CHECK(same.valid_count() == same.cells.size());
    for (const BlockCell &c : same.cells) {
        CHECK(c.du_axial == 0.0);
        CHECK(c.du_lateral == 0.0);
        CHECK(std::abs(c.ncc_peak - 1.0) < 1e-12);
    }

    const Image mov = circular_shift(img, 3, -2);
    const BlockGridField sh = ncc_match_pass(img, mov, 32, 16, 6, cfg);
    for (std::size_t i = 1; i + 1 < sh.grid_rows; ++i)
        for (std::size_t j = 1; j + 1 < sh.grid_cols; ++j) {
            const BlockCell &c = sh.at(i, j);
            CHECK(c.valid);
            CHECK(std::abs(c.du_axial - 3.0) < 0.5);
            CHECK(std::abs(c.du_lateral + 2.0) < 0.5);
            // Integer stage: the surface maximum sits at (3, -2) and matches the oracle.
            const auto r0 = static_cast<std::size_t>(c.center_row - 15.5);
            const auto c0 = static_cast<std::size_t>(c.center_col - 15.5);
            const NccSurface s = ncc_surface(img, mov, r0, c0, 32, 0, 0, 6);
            std::ptrdiff_t ba = 0, bl = 0;
            double best = -2.0;
            for (std::ptrdiff_t a = s.lo_axial; a <= s.hi_axial; ++a)
                for (std::ptrdiff_t l = s.lo_lateral; l <= s.hi_lateral; ++l)
                    if (s.at(a, l) > best) {
                        best = s.at(a, l);
                        ba = a;
                        bl = l;
                    }
            CHECK(ba == 3);
            CHECK(bl == -2);
            const double d = oracle::direct_zncc(img, mov, static_cast<long>(r0), static_cast<long>(c0),
                                                 static_cast<long>(r0) + 3, static_cast<long>(c0) - 2, 32);
            CHECK(std::abs(best - d) < 1e-9);
        }

    Image flat = img;
    for (std::size_t r = 0; r < 48; ++r)
        for (std::size_t c = 0; c < 48; ++c) flat(r, c) = 0.5;
    const BlockGridField fl = ncc_match_pass(flat, flat, 32, 16, 6, cfg);
    CHECK_FALSE(fl.at(0, 0).valid);
    CHECK(fl.at(0, 0).du_axial == 0.0);
    CHECK(fl.at(fl.grid_rows - 1, fl.grid_cols - 1).valid);
}

TEST_CASE("fill_and_smooth: spike, untouched grid, checkerboard ramp") {
    const FlowConfig cfg;
    BlockGridField g = uniform_grid(6, 0.0, 5.0);
    g.at(3, 2).du_lateral = 50.0;
    const BlockGridField f = fill_and_smooth(g, cfg);
    CHECK(f.at(3, 2).valid);
    CHECK(f.at(3, 2).filled);
    CHECK(f.at(3, 2).du_lateral == doctest::Approx(5.0));
    CHECK(f.at(3, 2).du_axial == doctest::Approx(0.0));

    BlockGridField smooth = uniform_grid(6, 0.0, 0.0);
    for (std::size_t i = 0; i < smooth.grid_rows; ++i)
        for (std::size_t j = 0; j < smooth.grid_cols; ++j) {
            smooth.at(i, j).du_axial = 0.1 * static_cast<double>(i);
            smooth.at(i, j).du_lateral = 0.2 * static_cast<double>(j);
        }
    const BlockGridField same = fill_and_smooth(smooth, cfg);
    for (std::size_t k = 0; k < smooth.cells.size(); ++k) {
        CHECK(same.cells[k].du_axial == smooth.cells[k].du_axial);
        CHECK(same.cells[k].du_lateral == smooth.cells[k].du_lateral);
        CHECK_FALSE(same.cells[k].filled);
    }

    BlockGridField cb = uniform_grid(8, 0.0, 0.0);
    auto ramp = [](std::size_t i, std::size_t j) { return 0.05 * static_cast<double>(i) + 0.08 * static_cast<double>(j); };
    for (std::size_t i = 0; i < cb.grid_rows; ++i)
        for (std::size_t j = 0; j < cb.grid_cols; ++j) {
            BlockCell &c = cb.at(i, j);
            c.du_lateral = ramp(i, j);
            c.du_axial = -ramp(i, j);
            c.valid = (i + j) % 2 == 0;
            if (!c.valid) c.du_axial = c.du_lateral = 0.0;
        }
    const BlockGridField filled = fill_and_smooth(cb, cfg);
    for (std::size_t i = 0; i < cb.grid_rows; ++i)
        for (std::size_t j = 0; j < cb.grid_cols; ++j) {
            CHECK(filled.at(i, j).valid);
            CHECK(std::abs(filled.at(i, j).du_lateral - ramp(i, j)) < 0.1);
            CHECK(std::abs(filled.at(i, j).du_axial + ramp(i, j)) < 0.1);
        }

    BlockGridField none = uniform_grid(4, 1.0, 1.0);
    for (BlockCell &c : none.cells) c.valid = false;
    const BlockGridField w = fill_and_smooth(none, cfg);
    CHECK(w.all_invalid_warning);
    CHECK(w.valid_count() == 0);
}

TEST_CASE("upsample_field: constant, ramp and node values") {
    const BlockGridField c = uniform_grid(5, 2.5, 0.0);
    const std::size_t n = 16 * 5 + 16;
    const DisplacementField d = upsample_field(c, n, n);
    for (std::size_t k = 0; k < d.size(); ++k) {
        CHECK(d.axial[k] == doctest::Approx(2.5));
        CHECK(d.lateral[k] == 0.0);
    }

    // Odd windows put block centres on whole pixels.
    BlockGridField ramp = make_block_grid(113, 113, 33, 17);
    REQUIRE(ramp.origin_row == std::floor(ramp.origin_row));
    BlockGridField rnd = ramp;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (std::size_t i = 0; i < ramp.grid_rows; ++i)
        for (std::size_t j = 0; j < ramp.grid_cols; ++j) {
            ramp.at(i, j).valid = rnd.at(i, j).valid = true;
            ramp.at(i, j).du_lateral = 0.7 * static_cast<double>(j) - 1.0;
            rnd.at(i, j).du_axial = u(rng);
            rnd.at(i, j).du_lateral = u(rng);
        }
    const DisplacementField dr = upsample_field(ramp, 113, 113);
    const DisplacementField dn = upsample_field(rnd, 113, 113);
    for (const BlockCell &cell : rnd.cells) {
        const auto k = static_cast<std::size_t>(cell.center_row) * 113 + static_cast<std::size_t>(cell.center_col);
        CHECK(dn.axial[k] == cell.du_axial);
        CHECK(dn.lateral[k] == cell.du_lateral);
        CHECK(dn.valid[k]);
    }
    const double first = ramp.origin_col;
    const double last = ramp.origin_col + static_cast<double>((ramp.grid_cols - 1) * ramp.step);
    for (std::size_t r = 0; r < 113; r += 7)
        for (std::size_t col = 0; col < 113; ++col) {
            const double x = std::clamp(static_cast<double>(col), first, last);
            const double j = (x - ramp.origin_col) / static_cast<double>(ramp.step);
            CHECK(std::abs(dr.lateral[r * 113 + col] - (0.7 * j - 1.0)) < 1e-9);
        }

    // An invalid cell removes validity from the pixels it touches.
    rnd.at(1, 1).valid = false;
    const DisplacementField dv = upsample_field(rnd, 113, 113);
    const auto k11 = static_cast<std::size_t>(rnd.at(1, 1).center_row) * 113 +
                     static_cast<std::size_t>(rnd.at(1, 1).center_col);
    CHECK_FALSE(dv.valid[k11 + 1]);
    CHECK(dv.valid[113 * 113 - 1]);

    BlockGridField one = make_block_grid(40, 40, 32, 16);
    CHECK_THROWS(upsample_field(one, 40, 40));
}

TEST_CASE("estimate_flow: identical images and intensity invariance") {
    const FlowConfig cfg;
    const Image img = oracle::random_image(128, 128, 21);
    const DisplacementField z = estimate_flow(img, img, cfg);
    for (std::size_t k = 0; k < z.size(); ++k) {
        CHECK(z.axial[k] == 0.0);
        CHECK(z.lateral[k] == 0.0);
    }

    const PhantomPair p = phantom_pair(2.4);
    Image ra = p.ref, ma = p.mov;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        ra[k] = 3.0 * ra[k] + 0.7;
        ma[k] = 3.0 * ma[k] + 0.7;
    }
    const DisplacementField f0 = estimate_flow(p.ref, p.mov, cfg);
    const DisplacementField f1 = estimate_flow(ra, ma, cfg);
    double worst = 0.0;
    for (std::size_t k = 0; k < f0.size(); ++k) {
        worst = std::max(worst, std::abs(f0.axial[k] - f1.axial[k]));
        worst = std::max(worst, std::abs(f0.lateral[k] - f1.lateral[k]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("estimate_flow: swap symmetry at an integer shift") {
    const FlowConfig cfg;
    const PhantomPair p = phantom_pair(4.0);
    const DisplacementField fw = restrict_interior(estimate_flow(p.ref, p.mov, cfg), 16);
    DisplacementField bw = estimate_flow(p.mov, p.ref, cfg);
    for (std::size_t k = 0; k < bw.size(); ++k) {
        bw.axial[k] = -bw.axial[k];
        bw.lateral[k] = -bw.lateral[k];
    }
    const auto e = oracle::field_rmse({fw}, {bw});
    CHECK(e.lateral < 0.1);
    CHECK(e.axial < 0.1);
}

TEST_CASE("estimate_flow: noiseless phantom pairs against ground truth") {
    const FlowConfig cfg;
    for (auto [step, tol] : {std::pair{5.0, 0.05}, std::pair{5.3, 0.1}}) {
        CAPTURE(step);
        const PhantomPair p = phantom_pair(step);
        const DisplacementField f = restrict_interior(estimate_flow(p.ref, p.mov, cfg), 16);
        const auto e = oracle::field_rmse({f}, {p.truth});
        CHECK(e.lateral < tol);
        CHECK(e.axial < tol);
    }
}

TEST_CASE("flow config validation") {
    FlowConfig c;
    c.passes = {{32, 16, 8}, {64, 32, 8}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.passes = {{32, 32, 8}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.passes = {{4, 2, 1}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FlowConfig{};
    c.min_ncc = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    const Image a(32, 32), b(32, 33);
    CHECK_THROWS_AS(estimate_flow(a, b, FlowConfig{}), ShapeError);
}
