#pragma once

// Bilinear warping as an explicit sparse operator. Row p of U gathers
// mov(p + d(p)); rows whose target leaves the raster are identity rows and
// are flagged out of view. The transpose is stored as well so that U^T is a
// deterministic gather too.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "oce/core/raster.hpp"

namespace oce::warp {

class WarpOperator {
  public:
    WarpOperator() = default;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t n_pixels() const { return rows_ * cols_; }
    std::size_t nnz() const { return in_index_.size(); }

    /// Out-of-view mask (1 = identity row because the target left the raster).
    const Mask &out_of_view() const { return out_of_view_; }

    Image apply(const Image &img) const;
    ComplexImage apply(const ComplexImage &img) const;
    Image apply_adjoint(const Image &img) const;
    ComplexImage apply_adjoint(const ComplexImage &img) const;

    /// U^T applied to the all-ones image: how much weight each input pixel spreads.
    Image column_sums() const;
    /// U^T img divided by column_sums(); pixels no output row reads take `fallback`.
    Image apply_adjoint_normalized(const Image &img, const Image &fallback) const;

    struct Triplet {
        std::size_t out_index;
        std::size_t in_index;
        double weight;
    };
    std::vector<Triplet> triplets() const;

    bool is_identity() const;

    friend WarpOperator build_warp(const DisplacementField &field);
    friend WarpOperator identity_warp(std::size_t rows, std::size_t cols);

  private:
    void build_transpose();
    template <typename T>
    Raster<T> gather(const Raster<T> &img, const std::vector<std::size_t> &ptr, const std::vector<std::size_t> &idx,
                     const std::vector<double> &w) const;

    std::size_t rows_ = 0, cols_ = 0;
    // CSR of U.
    std::vector<std::size_t> row_ptr_, in_index_;
    std::vector<double> weight_;
    // CSR of U^T.
    std::vector<std::size_t> t_ptr_, t_index_;
    std::vector<double> t_weight_;
    Mask out_of_view_;
};

WarpOperator build_warp(const DisplacementField &field);
WarpOperator identity_warp(std::size_t rows, std::size_t cols);

/// d(p) = first(p) + second(p + first(p)), the inner field sampled bilinearly
/// and linearly extrapolated past the edges. Validity is the AND of both
/// samples' neighbourhoods.
DisplacementField compose_fields(const DisplacementField &first, const DisplacementField &second);

/// Field g with g(p) + f(p + g(p)) ~= 0, i.e. the inverse mapping, by
/// fixed-point iteration.
DisplacementField invert_field(const DisplacementField &f, int iterations = 50);

/// For each frame t, the field d_t with ref(p) ~= frame_t(p + d_t(p)), built
/// from pairwise neighbour fields pairwise[i] (frame i -> i + 1). The
/// reference gets the zero field.
std::vector<DisplacementField> fields_to_reference(const std::vector<DisplacementField> &pairwise,
                                                   std::size_t reference_index);

/// build_warp() over fields_to_reference().
std::vector<WarpOperator> compose_to_reference(const std::vector<DisplacementField> &pairwise,
                                               std::size_t reference_index);

/// Debug dump of the triplets as a 3 x nnz f64 raster (out, in, weight).
void write_triplets(const WarpOperator &op, const std::filesystem::path &path);

} // namespace oce::warp
