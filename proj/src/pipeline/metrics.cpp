#include "oce/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace oce::pipeline {

double rmse_image(const Image &est, const Image &truth, const Mask *mask) {
    if (!est.geometry().same_shape(truth.geometry())) throw ShapeError("rmse_image: shape mismatch");
    if (mask && !mask->geometry().same_shape(est.geometry())) throw ShapeError("rmse_image: mask shape mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const double d = est[i] - truth[i];
        acc += d * d;
        ++n;
    }
    if (n == 0) throw DomainError("rmse_image: empty mask");
    return std::sqrt(acc / static_cast<double>(n));
}

namespace {

void accumulate(const DisplacementField &est, const DisplacementField &truth, const Mask *region, double &sl,
                double &sa, std::size_t &n) {
    est.validate();
    truth.validate();
    if (est.rows != truth.rows || est.cols != truth.cols) throw ShapeError("rmse_field: shape mismatch");
    if (region && (region->rows() != est.rows || region->cols() != est.cols)) {
        throw ShapeError("rmse_field: region shape mismatch");
    }
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (!est.valid[i] || !truth.valid[i] || (region && !(*region)[i])) continue;
        const double dl = est.lateral[i] - truth.lateral[i];
        const double da = est.axial[i] - truth.axial[i];
        sl += dl * dl;
        sa += da * da;
        ++n;
    }
}

FieldRmse finish(double sl, double sa, std::size_t n) {
    if (n == 0) throw DomainError("rmse_field: no jointly valid pixels");
    return {std::sqrt(sl / static_cast<double>(n)), std::sqrt(sa / static_cast<double>(n)), n};
}

} // namespace

FieldRmse rmse_field(const DisplacementField &est, const DisplacementField &truth, const Mask *region) {
    double sl = 0.0, sa = 0.0;
    std::size_t n = 0;
    accumulate(est, truth, region, sl, sa, n);
    return finish(sl, sa, n);
}

FieldRmse rmse_field(const std::vector<DisplacementField> &est, const std::vector<DisplacementField> &truth,
                     const Mask *region) {
    if (est.size() != truth.size()) throw ShapeError("rmse_field: field list lengths differ");
    double sl = 0.0, sa = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < est.size(); ++k) accumulate(est[k], truth[k], region, sl, sa, n);
    return finish(sl, sa, n);
}

double ncc(const Image &est, const Image &truth) {
    if (!est.geometry().same_shape(truth.geometry())) throw ShapeError("ncc: shape mismatch");
    const double n = static_cast<double>(est.size());
    double me = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        me += est[i];
        mt += truth[i];
    }
    me /= n;
    mt /= n;
    double see = 0.0, stt = 0.0, set = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double a = est[i] - me, b = truth[i] - mt;
        see += a * a;
        stt += b * b;
        set += a * b;
    }
    if (!(see > 0.0) || !(stt > 0.0)) throw DomainError("ncc: zero variance input");
    return std::clamp(set / std::sqrt(see * stt), -1.0, 1.0);
}

double mean_gradient_magnitude(const DisplacementField &f, const Mask *region) {
    f.validate();
    if (f.rows < 3 || f.cols < 3) throw ShapeError("mean_gradient_magnitude: field too small");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 1; r + 1 < f.rows; ++r) {
        for (std::size_t c = 1; c + 1 < f.cols; ++c) {
            const std::size_t i = f.index(r, c);
            if (region && !(*region)[i]) continue;
            const std::size_t up = f.index(r - 1, c), dn = f.index(r + 1, c);
            const std::size_t lf = f.index(r, c - 1), rt = f.index(r, c + 1);
            if (!f.valid[i] || !f.valid[up] || !f.valid[dn] || !f.valid[lf] || !f.valid[rt]) continue;
            const double aa = 0.5 * (f.axial[dn] - f.axial[up]);
            const double al = 0.5 * (f.axial[rt] - f.axial[lf]);
            const double la = 0.5 * (f.lateral[dn] - f.lateral[up]);
            const double ll = 0.5 * (f.lateral[rt] - f.lateral[lf]);
            acc += std::sqrt(aa * aa + al * al + la * la + ll * ll);
            ++n;
        }
    }
    if (n == 0) throw DomainError("mean_gradient_magnitude: no valid interior pixels");
    return acc / static_cast<double>(n);
}

Mask interior_mask(std::size_t rows, std::size_t cols, std::size_t margin) {
    Mask m(rows, cols, 0);
    for (std::size_t r = margin; r + margin < rows; ++r)
        for (std::size_t c = margin; c + margin < cols; ++c) m(r, c) = 1;
    return m;
}

} // namespace oce::pipeline
