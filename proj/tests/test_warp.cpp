#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "oce/core/parallel.hpp"
#include "oce/core/raster_io.hpp"
#include "oce/phantom/phantom.hpp"
#include "oce/warp/warp.hpp"
#include "oracles.hpp"

using namespace oce;
using namespace oce::warp;

namespace {

// Row sums and entry lists straight from the triplets.
std::vector<double> row_sums(const WarpOperator &op) {
    std::vector<double> s(op.n_pixels(), 0.0);
    for (const auto &t : op.triplets()) s[t.out_index] += t.weight;
    return s;
}

std::vector<std::vector<WarpOperator::Triplet>> rows_of(const WarpOperator &op) {
    std::vector<std::vector<WarpOperator::Triplet>> r(op.n_pixels());
    for (const auto &t : op.triplets()) r[t.out_index].push_back(t);
    return r;
}

} // namespace

TEST_CASE("build_warp: zero field is the identity") {
    const WarpOperator op = build_warp(DisplacementField::constant(12, 9, 0.0, 0.0));
    CHECK(op.is_identity());
    const auto rows = rows_of(op);
    for (std::size_t p = 0; p < rows.size(); ++p) {
        REQUIRE(rows[p].size() == 1);
        CHECK(rows[p][0].in_index == p);
        CHECK(rows[p][0].weight == 1.0);
    }
    const Image x = oracle::random_image(12, 9, 1);
    CHECK(op.apply(x) == x);
    CHECK(op.apply_adjoint(x) == x);
    CHECK(identity_warp(12, 9).apply(x) == x);
}

TEST_CASE("build_warp: integer lateral shift of three columns") {
    const std::size_t R = 10, C = 16;
    const WarpOperator op = build_warp(DisplacementField::constant(R, C, 0.0, 3.0));
    const auto rows = rows_of(op);
    const Image x = oracle::random_image(R, C, 2);
    const Image y = op.apply(x);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t p = r * C + c;
            const bool out = c + 3 >= C;
            CHECK(static_cast<bool>(op.out_of_view()(r, c)) == out);
            CHECK(y(r, c) == (out ? x(r, c) : x(r, c + 3)));
            double s = 0.0;
            for (const auto &t : rows[p]) {
                CHECK((t.weight == 0.0 || t.weight == 1.0));
                s += t.weight;
            }
            CHECK(s == 1.0);
        }
    // The transpose moves content the other way on the in-view support.
    const Image z = op.apply_adjoint(x);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 3; c < C - 3; ++c) CHECK(z(r, c) == x(r, c - 3));
}

TEST_CASE("build_warp: half-pixel shift splits a unit pixel") {
    const WarpOperator op = build_warp(DisplacementField::constant(6, 8, 0.0, 0.5));
    const auto rows = rows_of(op);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c + 1 < 8; ++c) {
            const auto &e = rows[r * 8 + c];
            std::vector<double> w;
            for (const auto &t : e)
                if (t.weight != 0.0) w.push_back(t.weight);
            REQUIRE(w.size() == 2);
            CHECK(w[0] == 0.5);
            CHECK(w[1] == 0.5);
        }
    CHECK(op.out_of_view()(2, 7));
    Image delta(6, 8);
    delta(3, 4) = 1.0;
    const Image y = op.apply(delta);
    double total = 0.0;
    for (double v : y.vec()) total += v;
    CHECK(y(3, 3) == 0.5);
    CHECK(y(3, 4) == 0.5);
    CHECK(total == 1.0);
}

TEST_CASE("warp: linearity and complex application") {
    const DisplacementField f = oracle::smooth_field(40, 50, 3, 4.0);
    const WarpOperator op = build_warp(f);
    const Image a = oracle::random_image(40, 50, 4, -1.0, 1.0);
    const Image b = oracle::random_image(40, 50, 5, -1.0, 1.0);
    const double al = 0.7, be = -1.9;
    Image mix(40, 50);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = al * a[i] + be * b[i];
    const Image lhs = op.apply(mix), ua = op.apply(a), ub = op.apply(b);
    const Image tl = op.apply_adjoint(mix), ta = op.apply_adjoint(a), tb = op.apply_adjoint(b);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        CHECK(std::abs(lhs[i] - (al * ua[i] + be * ub[i])) < 1e-12);
        CHECK(std::abs(tl[i] - (al * ta[i] + be * tb[i])) < 1e-12);
    }
    ComplexImage z(40, 50);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = cplx(a[i], b[i]);
    const ComplexImage uz = op.apply(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(std::abs(uz[i].real() - ua[i]) < 1e-14);
        CHECK(std::abs(uz[i].imag() - ub[i]) < 1e-14);
    }
    CHECK_THROWS_AS(op.apply(Image(40, 49)), ShapeError);
}

TEST_CASE("warp: adjoint dot-product test on random smooth fields") {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const WarpOperator op = build_warp(oracle::smooth_field(64, 64, 100 + s, 6.0));
        const Image x = oracle::random_image(64, 64, 200 + s, -1.0, 1.0);
        const Image y = oracle::random_image(64, 64, 300 + s, -1.0, 1.0);
        const double l = oracle::dot(op.apply(x), y), r = oracle::dot(x, op.apply_adjoint(y));
        worst = std::max(worst, std::abs(l - r) / (oracle::norm(x) * oracle::norm(y)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("warp: in-view rows are stochastic, out-of-view rows are identity") {
    DisplacementField f = oracle::smooth_field(48, 48, 9, 10.0);
    const WarpOperator op = build_warp(f);
    const auto sums = row_sums(op);
    const auto rows = rows_of(op);
    std::size_t n_out = 0;
    for (std::size_t p = 0; p < sums.size(); ++p) {
        CHECK(std::abs(sums[p] - 1.0) < 1e-12);
        for (const auto &t : rows[p]) CHECK((t.weight >= 0.0 && t.weight <= 1.0));
        if (op.out_of_view()[p]) {
            ++n_out;
            REQUIRE(rows[p].size() == 1);
            CHECK(rows[p][0].in_index == p);
            CHECK(rows[p][0].weight == 1.0);
        }
    }
    CHECK(n_out > 0);
    Image one(48, 48, 1.0);
    const Image u1 = op.apply(one);
    for (double v : u1.vec()) CHECK(std::abs(v - 1.0) < 1e-12);

    // Out of view is decided by the sample position, not the field magnitude.
    for (std::size_t r = 0; r < 48; ++r)
        for (std::size_t c = 0; c < 48; ++c) {
            const std::size_t p = r * 48 + c;
            const double tr = static_cast<double>(r) + f.axial[p], tc = static_cast<double>(c) + f.lateral[p];
            const bool inside = tr >= 0.0 && tc >= 0.0 && tr <= 47.0 && tc <= 47.0;
            CHECK(static_cast<bool>(op.out_of_view()[p]) == !inside);
        }

    f.axial[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_warp(f), DomainError);
}

TEST_CASE("warp: normalized adjoint and triplet dump") {
    const WarpOperator op = build_warp(DisplacementField::constant(8, 8, 0.0, 0.5));
    const Image cs = op.column_sums();
    CHECK(cs == op.apply_adjoint(Image(8, 8, 1.0)));
    const Image fallback(8, 8, -3.0);
    const Image c(8, 8, 0.25);
    const Image n = op.apply_adjoint_normalized(c, fallback);
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (cs[i] > 0.0)
            CHECK(n[i] == doctest::Approx(0.25));
        else
            CHECK(n[i] == -3.0);
    }
    CHECK_THROWS_AS(op.apply_adjoint_normalized(c, Image(8, 7)), ShapeError);

    const auto path = std::filesystem::temp_directory_path() / "oce_test_triplets.ocer";
    write_triplets(op, path);
    const RasterArray a = read_raster(path);
    REQUIRE(a.dims == std::vector<std::uint32_t>{3, static_cast<std::uint32_t>(op.nnz())});
    const auto &v = std::get<std::vector<double>>(a.values);
    const auto t = op.triplets();
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(v[k] == static_cast<double>(t[k].out_index));
        CHECK(v[t.size() + k] == static_cast<double>(t[k].in_index));
        CHECK(v[2 * t.size() + k] == t[k].weight);
    }
    std::filesystem::remove(path);
}

TEST_CASE("warp: application is independent of the worker count") {
    const WarpOperator op = build_warp(oracle::smooth_field(96, 80, 13, 5.0));
    const Image x = oracle::random_image(96, 80, 14);
    set_thread_count(1);
    const Image a = op.apply(x), at = op.apply_adjoint(x);
    set_thread_count(4);
    const Image b = op.apply(x), bt = op.apply_adjoint(x);
    set_thread_count(0);
    CHECK(a == b);
    CHECK(at == bt);
}

TEST_CASE("compose_fields and fields_to_reference") {
    const DisplacementField h = DisplacementField::constant(20, 30, 0.0, 2.5);
    const DisplacementField c = compose_fields(h, h);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c.lateral[i] == 5.0);
        CHECK(c.axial[i] == 0.0);
    }
    const auto to_ref = fields_to_reference({h, h, h, h}, 2);
    REQUIRE(to_ref.size() == 5);
    for (std::size_t i = 0; i < to_ref[2].size(); ++i) {
        CHECK(to_ref[2].lateral[i] == 0.0);
        CHECK(to_ref[3].lateral[i] == 2.5);
        CHECK(to_ref[4].lateral[i] == 5.0);
        CHECK(to_ref[1].lateral[i] == doctest::Approx(-2.5));
        CHECK(to_ref[0].lateral[i] == doctest::Approx(-5.0));
    }
    const auto ops = compose_to_reference({h, h, h, h}, 2);
    CHECK(ops[2].is_identity());
    CHECK_FALSE(ops[0].is_identity());
    CHECK_THROWS_AS(fields_to_reference({h, h}, 3), DomainError);
    CHECK_THROWS_AS(fields_to_reference({}, 0), DomainError);

    // Round trip through the inverse; the residual is the bilinear error of
    // sampling the inner field, small for slowly varying fields.
    const DisplacementField g = oracle::smooth_field(128, 128, 5, 1.5);
    const DisplacementField back = compose_fields(g, invert_field(g));
    double worst = 0.0;
    for (std::size_t r = 0; r < 128; ++r)
        for (std::size_t col = 0; col < 128; ++col) {
            worst = std::max(worst, std::abs(back.axial[back.index(r, col)]));
            worst = std::max(worst, std::abs(back.lateral[back.index(r, col)]));
        }
    CHECK(worst < 5e-3);
}

TEST_CASE("compose_to_reference: smooth compression against the direct ground truth") {
    phantom::MotionSpec m;
    m.kind = phantom::MotionKind::smooth_compression;
    m.n_frames = 5;
    m.compression_peak = 2.0;
    m.width_px = 60.0;
    const std::size_t R = 128, C = 128;
    const auto pairwise = phantom::make_motion(m, R, C);
    const auto composed = fields_to_reference(pairwise, 2);
    double worst = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
        const DisplacementField truth = phantom::ground_truth_to_reference(m, R, C, 2, t);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (!truth.valid[i] || !composed[t].valid[i]) continue;
            worst = std::max(worst, std::abs(truth.axial[i] - composed[t].axial[i]));
            worst = std::max(worst, std::abs(truth.lateral[i] - composed[t].lateral[i]));
        }
    }
    CHECK(worst < 0.05);
}
