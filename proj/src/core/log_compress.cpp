#include "oce/core/log_compress.hpp"

#include <algorithm>
#include <cmath>

namespace oce {

double max_magnitude(const ComplexImage &img) {
    double m = 0.0;
    for (const cplx &z : img.data()) m = std::max(m, std::abs(z));
    return m;
}

Image log_compress(const ComplexImage &img, double floor_db) {
    return log_compress(img, floor_db, max_magnitude(img));
}

Image log_compress(const ComplexImage &img, double floor_db, double ref_max) {
    if (!(floor_db < 0.0)) throw DomainError("log_compress: floor_db must be negative");
    if (!(ref_max > 0.0) || !std::isfinite(ref_max)) {
        throw DomainError("log_compress: image is all zero, normalisation undefined");
    }
    Image out(img.geometry());
    const double span = -floor_db;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double mag = std::abs(img[i]);
        double db = floor_db;
        if (mag > 0.0) db = std::max(20.0 * std::log10(mag / ref_max), floor_db);
        out[i] = std::min((db - floor_db) / span, 1.0);
    }
    return out;
}

} // namespace oce
