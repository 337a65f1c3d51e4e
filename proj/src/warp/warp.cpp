#include "oce/warp/warp.hpp"

#include <algorithm>
#include <cmath>

#include "oce/core/parallel.hpp"
#include "oce/core/raster_io.hpp"

namespace oce::warp {

namespace {

// Taps of a clamped-edge bilinear sample; weights may be zero.
struct Taps {
    std::size_t r0, r1, c0, c1;
    double fr, fc;
};

Taps taps_at(std::size_t rows, std::size_t cols, double r, double c) {
    Taps t{};
    detail::clamp_cell(r, rows, t.r0, t.fr);
    detail::clamp_cell(c, cols, t.c0, t.fc);
    t.r1 = std::min(t.r0 + 1, rows - 1);
    t.c1 = std::min(t.c0 + 1, cols - 1);
    return t;
}

bool taps_valid(const DisplacementField &f, const Taps &t) {
    auto ok = [&](std::size_t r, std::size_t c) { return f.valid[f.index(r, c)] != 0; };
    if (!ok(t.r0, t.c0)) return false;
    if (t.fc > 0.0 && !ok(t.r0, t.c1)) return false;
    if (t.fr > 0.0 && !ok(t.r1, t.c0)) return false;
    if (t.fr > 0.0 && t.fc > 0.0 && !ok(t.r1, t.c1)) return false;
    return true;
}

// Bilinear inside the raster; outside, the edge value plus the one-sided edge
// gradient times the distance. Compositions sample a few pixels past the
// border and clamping would freeze the field there.
void sample_extrapolated(const DisplacementField &f, double r, double c, double &ua, double &ul) {
    const double last_r = static_cast<double>(f.rows - 1), last_c = static_cast<double>(f.cols - 1);
    const double rc = std::clamp(r, 0.0, last_r), cc = std::clamp(c, 0.0, last_c);
    f.sample(rc, cc, ua, ul);
    auto extend = [&](double dist, double r0, double c0, double r1, double c1) {
        double a0, l0, a1, l1;
        f.sample(r0, c0, a0, l0);
        f.sample(r1, c1, a1, l1);
        ua += dist * (a1 - a0);
        ul += dist * (l1 - l0);
    };
    if (r != rc && f.rows > 1) {
        if (r < 0.0) extend(-r, 1.0, cc, 0.0, cc);
        else extend(r - last_r, last_r - 1.0, cc, last_r, cc);
    }
    if (c != cc && f.cols > 1) {
        if (c < 0.0) extend(-c, rc, 1.0, rc, 0.0);
        else extend(c - last_c, rc, last_c - 1.0, rc, last_c);
    }
}

} // namespace

WarpOperator identity_warp(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ShapeError("warp: empty raster");
    WarpOperator op;
    op.rows_ = rows;
    op.cols_ = cols;
    const std::size_t n = rows * cols;
    op.row_ptr_.resize(n + 1);
    op.in_index_.resize(n);
    op.weight_.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) op.row_ptr_[i] = i;
    for (std::size_t i = 0; i < n; ++i) op.in_index_[i] = i;
    op.out_of_view_ = Mask(rows, cols, 0);
    op.build_transpose();
    return op;
}

WarpOperator build_warp(const DisplacementField &field) {
    field.validate();
    const std::size_t rows = field.rows, cols = field.cols;
    WarpOperator op;
    op.rows_ = rows;
    op.cols_ = cols;
    op.out_of_view_ = Mask(rows, cols, 0);
    const std::size_t n = rows * cols;
    op.row_ptr_.assign(n + 1, 0);
    op.in_index_.reserve(n * 4);
    op.weight_.reserve(n * 4);

    const double rmax = static_cast<double>(rows - 1);
    const double cmax = static_cast<double>(cols - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t p = field.index(r, c);
            const double ua = field.axial[p], ul = field.lateral[p];
            if (!std::isfinite(ua) || !std::isfinite(ul)) throw DomainError("build_warp: non-finite displacement");
            const double tr = static_cast<double>(r) + ua;
            const double tc = static_cast<double>(c) + ul;
            if (tr < 0.0 || tr > rmax || tc < 0.0 || tc > cmax) {
                op.out_of_view_[p] = 1;
                op.in_index_.push_back(p);
                op.weight_.push_back(1.0);
            } else {
                const Taps t = taps_at(rows, cols, tr, tc);
                const double w[4] = {(1.0 - t.fr) * (1.0 - t.fc), (1.0 - t.fr) * t.fc, t.fr * (1.0 - t.fc),
                                     t.fr * t.fc};
                const std::size_t idx[4] = {t.r0 * cols + t.c0, t.r0 * cols + t.c1, t.r1 * cols + t.c0,
                                            t.r1 * cols + t.c1};
                for (int k = 0; k < 4; ++k) {
                    if (w[k] == 0.0) continue;
                    op.in_index_.push_back(idx[k]);
                    op.weight_.push_back(w[k]);
                }
            }
            op.row_ptr_[p + 1] = op.in_index_.size();
        }
    }
    op.build_transpose();
    return op;
}

void WarpOperator::build_transpose() {
    const std::size_t n = n_pixels();
    t_ptr_.assign(n + 1, 0);
    for (std::size_t idx : in_index_) ++t_ptr_[idx + 1];
    for (std::size_t i = 0; i < n; ++i) t_ptr_[i + 1] += t_ptr_[i];
    t_index_.resize(in_index_.size());
    t_weight_.resize(in_index_.size());
    std::vector<std::size_t> fill(t_ptr_.begin(), t_ptr_.end() - 1);
    for (std::size_t out = 0; out < n; ++out) {
        for (std::size_t k = row_ptr_[out]; k < row_ptr_[out + 1]; ++k) {
            const std::size_t slot = fill[in_index_[k]]++;
            t_index_[slot] = out;
            t_weight_[slot] = weight_[k];
        }
    }
}

template <typename T>
Raster<T> WarpOperator::gather(const Raster<T> &img, const std::vector<std::size_t> &ptr,
                               const std::vector<std::size_t> &idx, const std::vector<double> &w) const {
    if (img.rows() != rows_ || img.cols() != cols_) throw ShapeError("warp: image shape does not match the operator");
    Raster<T> out(img.geometry());
    const auto in = img.data();
    auto dst = out.data();
    parallel_for(rows_, [&](std::size_t r) {
        for (std::size_t p = r * cols_; p < (r + 1) * cols_; ++p) {
            const std::size_t b = ptr[p], e = ptr[p + 1];
            if (b == e) {
                dst[p] = T{};
                continue;
            }
            T acc = w[b] * in[idx[b]];
            for (std::size_t k = b + 1; k < e; ++k) acc += w[k] * in[idx[k]];
            dst[p] = acc;
        }
    });
    return out;
}

Image WarpOperator::apply(const Image &img) const { return gather(img, row_ptr_, in_index_, weight_); }
ComplexImage WarpOperator::apply(const ComplexImage &img) const { return gather(img, row_ptr_, in_index_, weight_); }
Image WarpOperator::apply_adjoint(const Image &img) const { return gather(img, t_ptr_, t_index_, t_weight_); }
ComplexImage WarpOperator::apply_adjoint(const ComplexImage &img) const {
    return gather(img, t_ptr_, t_index_, t_weight_);
}

Image WarpOperator::column_sums() const {
    Image out(rows_, cols_);
    for (std::size_t p = 0; p < n_pixels(); ++p) {
        double acc = 0.0;
        for (std::size_t k = t_ptr_[p]; k < t_ptr_[p + 1]; ++k) acc += t_weight_[k];
        out[p] = acc;
    }
    return out;
}

Image WarpOperator::apply_adjoint_normalized(const Image &img, const Image &fallback) const {
    if (!fallback.geometry().same_shape(img.geometry())) throw ShapeError("warp: fallback shape differs");
    Image out = apply_adjoint(img);
    const Image sums = column_sums();
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = sums[p] > 0.0 ? out[p] / sums[p] : fallback[p];
    return out;
}

std::vector<WarpOperator::Triplet> WarpOperator::triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t p = 0; p < n_pixels(); ++p)
        for (std::size_t k = row_ptr_[p]; k < row_ptr_[p + 1]; ++k) out.push_back({p, in_index_[k], weight_[k]});
    return out;
}

bool WarpOperator::is_identity() const {
    if (nnz() != n_pixels()) return false;
    for (std::size_t p = 0; p < n_pixels(); ++p) {
        if (row_ptr_[p + 1] - row_ptr_[p] != 1 || in_index_[row_ptr_[p]] != p || weight_[row_ptr_[p]] != 1.0) return false;
    }
    return true;
}

DisplacementField compose_fields(const DisplacementField &first, const DisplacementField &second) {
    first.validate();
    second.validate();
    if (first.rows != second.rows || first.cols != second.cols) throw ShapeError("compose_fields: shape mismatch");
    DisplacementField out(first.rows, first.cols);
    for (std::size_t r = 0; r < first.rows; ++r) {
        for (std::size_t c = 0; c < first.cols; ++c) {
            const std::size_t p = first.index(r, c);
            const double tr = static_cast<double>(r) + first.axial[p];
            const double tc = static_cast<double>(c) + first.lateral[p];
            double sa = 0.0, sl = 0.0;
            sample_extrapolated(second, tr, tc, sa, sl);
            out.axial[p] = first.axial[p] + sa;
            out.lateral[p] = first.lateral[p] + sl;
            out.valid[p] = first.valid[p] && taps_valid(second, taps_at(first.rows, first.cols, tr, tc));
        }
    }
    return out;
}

DisplacementField invert_field(const DisplacementField &f, int iterations) {
    f.validate();
    DisplacementField g(f.rows, f.cols);
    for (std::size_t r = 0; r < f.rows; ++r) {
        for (std::size_t c = 0; c < f.cols; ++c) {
            const std::size_t p = f.index(r, c);
            double ga = -f.axial[p], gl = -f.lateral[p];
            for (int it = 0; it < iterations; ++it) {
                double fa = 0.0, fl = 0.0;
                sample_extrapolated(f, static_cast<double>(r) + ga, static_cast<double>(c) + gl, fa, fl);
                const double na = -fa, nl = -fl;
                const double delta = std::abs(na - ga) + std::abs(nl - gl);
                ga = na;
                gl = nl;
                if (delta < 1e-12) break;
            }
            g.axial[p] = ga;
            g.lateral[p] = gl;
            g.valid[p] = taps_valid(f, taps_at(f.rows, f.cols, static_cast<double>(r) + ga, static_cast<double>(c) + gl));
        }
    }
    return g;
}

std::vector<DisplacementField> fields_to_reference(const std::vector<DisplacementField> &pairwise,
                                                   std::size_t reference_index) {
    if (pairwise.empty()) throw DomainError("fields_to_reference: no pairwise fields");
    const std::size_t n_frames = pairwise.size() + 1;
    if (reference_index >= n_frames) throw DomainError("fields_to_reference: reference index out of range");
    const std::size_t rows = pairwise.front().rows, cols = pairwise.front().cols;
    std::vector<DisplacementField> out(n_frames);
    out[reference_index] = DisplacementField(rows, cols);

    for (std::size_t t = reference_index + 1; t < n_frames; ++t) {
        out[t] = t == reference_index + 1 ? pairwise[t - 1] : compose_fields(out[t - 1], pairwise[t - 1]);
    }
    for (std::size_t t = reference_index; t-- > 0;) {
        // pairwise[t] maps frame t -> t + 1; its inverse maps t + 1 -> t.
        const DisplacementField back = invert_field(pairwise[t]);
        out[t] = t + 1 == reference_index ? back : compose_fields(out[t + 1], back);
    }
    for (auto &f : out) f.enforce_invalid_identity();
    return out;
}

std::vector<WarpOperator> compose_to_reference(const std::vector<DisplacementField> &pairwise,
                                               std::size_t reference_index) {
    const auto fields = fields_to_reference(pairwise, reference_index);
    std::vector<WarpOperator> ops(fields.size());
    parallel_for(fields.size(), [&](std::size_t t) {
        ops[t] = t == reference_index ? identity_warp(fields[t].rows, fields[t].cols) : build_warp(fields[t]);
    });
    return ops;
}

void write_triplets(const WarpOperator &op, const std::filesystem::path &path) {
    const auto trip = op.triplets();
    std::vector<double> planes(3 * trip.size());
    for (std::size_t i = 0; i < trip.size(); ++i) {
        planes[i] = static_cast<double>(trip[i].out_index);
        planes[trip.size() + i] = static_cast<double>(trip[i].in_index);
        planes[2 * trip.size() + i] = trip[i].weight;
    }
    RasterArray a;
    a.dims = {3, static_cast<std::uint32_t>(trip.size())};
    a.values = std::move(planes);
    write_raster(a, path);
}

} // namespace oce::warp
