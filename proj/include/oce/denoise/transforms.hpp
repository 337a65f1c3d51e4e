#pragma once

// Orthonormal 1-D bases used by the collaborative filter, stored as dense
// row-major n x n matrices (row k = k-th basis vector, row 0 = constant).

#include <cstddef>
#include <span>
#include <vector>

namespace oce::denoise {

/// DCT-II with orthonormal scaling.
std::vector<double> dct_matrix(std::size_t n);

/// Haar basis for any length. Segments are split into halves (left half gets
/// the extra sample when n is odd); each split contributes one +/- step vector
/// scaled to unit norm. Equals the usual Haar basis for powers of two.
std::vector<double> haar_matrix(std::size_t n);

/// Separable transform of a group laid out as [member][time][row][col] with
/// block x block spatial extent: 2-D DCT over space, Haar over time, Haar over
/// members. Coefficient 0 is the all-DC term.
class GroupTransform {
  public:
    GroupTransform(std::size_t block, std::size_t frames, std::size_t members);

    std::size_t size() const { return b_ * b_ * t_ * m_; }
    void forward(std::span<double> data) const;
    void inverse(std::span<double> data) const;

  private:
    // Applies mat (n x n) or its transpose along one axis of extent n with the
    // given stride, for every index combination of the other axes.
    void along(std::span<double> data, const std::vector<double> &mat, std::size_t n, std::size_t stride,
               bool transpose) const;

    std::size_t b_, t_, m_;
    std::vector<double> dct_, haar_t_, haar_m_;
};

} // namespace oce::denoise
