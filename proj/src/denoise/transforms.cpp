#include "oce/denoise/transforms.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace oce::denoise {

std::vector<double> dct_matrix(std::size_t n) {
    std::vector<double> m(n * n);
    const double N = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
        for (std::size_t j = 0; j < n; ++j) {
            m[k * n + j] = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) *
                                            static_cast<double>(k) / (2.0 * N));
        }
    }
    return m;
}

std::vector<double> haar_matrix(std::size_t n) {
    std::vector<double> m(n * n, 0.0);
    if (n == 0) return m;
    for (std::size_t j = 0; j < n; ++j) m[j] = 1.0 / std::sqrt(static_cast<double>(n));
    // Breadth-first over segments so rows run coarse to fine.
    std::vector<std::pair<std::size_t, std::size_t>> level{{0, n}};
    std::size_t row = 1;
    while (!level.empty()) {
        std::vector<std::pair<std::size_t, std::size_t>> next;
        for (auto [lo, len] : level) {
            if (len < 2) continue;
            const std::size_t nl = (len + 1) / 2, nr = len - nl;
            const double L = static_cast<double>(nl), R = static_cast<double>(nr), S = static_cast<double>(len);
            const double a = std::sqrt(R / (L * S)), b = std::sqrt(L / (R * S));
            for (std::size_t j = 0; j < nl; ++j) m[row * n + lo + j] = a;
            for (std::size_t j = 0; j < nr; ++j) m[row * n + lo + nl + j] = -b;
            ++row;
            next.emplace_back(lo, nl);
            next.emplace_back(lo + nl, nr);
        }
        level = std::move(next);
    }
    return m;
}

GroupTransform::GroupTransform(std::size_t block, std::size_t frames, std::size_t members)
    : b_(block), t_(frames), m_(members), dct_(dct_matrix(block)), haar_t_(haar_matrix(frames)),
      haar_m_(haar_matrix(members)) {}

void GroupTransform::along(std::span<double> data, const std::vector<double> &mat, std::size_t n, std::size_t stride,
                           bool transpose) const {
    if (n < 2) return;
    const std::size_t span = n * stride;
    const std::size_t outer = data.size() / span;
    std::vector<double> in(n), out(n);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < stride; ++s) {
            double *base = data.data() + o * span + s;
            for (std::size_t j = 0; j < n; ++j) in[j] = base[j * stride];
            for (std::size_t k = 0; k < n; ++k) {
                double acc = 0.0;
                if (transpose) {
                    for (std::size_t j = 0; j < n; ++j) acc += mat[j * n + k] * in[j];
                } else {
                    for (std::size_t j = 0; j < n; ++j) acc += mat[k * n + j] * in[j];
                }
                out[k] = acc;
            }
            for (std::size_t k = 0; k < n; ++k) base[k * stride] = out[k];
        }
    }
}

void GroupTransform::forward(std::span<double> data) const {
    along(data, dct_, b_, 1, false);
    along(data, dct_, b_, b_, false);
    along(data, haar_t_, t_, b_ * b_, false);
    along(data, haar_m_, m_, b_ * b_ * t_, false);
}

void GroupTransform::inverse(std::span<double> data) const {
    along(data, haar_m_, m_, b_ * b_ * t_, true);
    along(data, haar_t_, t_, b_ * b_, true);
    along(data, dct_, b_, b_, true);
    along(data, dct_, b_, 1, true);
}

} // namespace oce::denoise
