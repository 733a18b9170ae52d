#pragma once

#include "cloob/mat.hpp"

#include <cstddef>

namespace cloob {

/// N unit-norm embedding rows for one modality.
class EmbeddingBatch {
public:
    explicit EmbeddingBatch(Mat rows);

    /// Skips the unit-norm check. Used for raw (un-renormalized)
    /// retrievals only.
    static EmbeddingBatch unchecked(Mat rows);

    std::size_t n() const { return rows_.rows(); }
    std::size_t dim() const { return rows_.cols(); }
    const Mat& rows() const { return rows_; }
    Vec row(std::size_t i) const { return rows_.row(i); }

private:
    struct unchecked_tag {};
    EmbeddingBatch(Mat rows, unchecked_tag) : rows_(std::move(rows)) {}
    Mat rows_;
};

/// Scalar loss plus the per-anchor alignment/uniformity bookkeeping that
/// the gradient analysis works with. Alignment and uniformity terms are
/// recorded for the first loss direction (anchors on the x side).
struct LossReport {
    double loss = 0.0;
    double inv_temp = 0.0;
    Vec per_anchor_alignment;   // a_i = exp(tau^-1 x_i^T y_i)
    Vec per_anchor_uniformity;  // b_i = sum_{j != i} exp(tau^-1 x_i^T y_j)
    Vec p1;                     // softmax weight of the positive (InfoNCE only)
};

struct LossGrads {
    Mat d_x;
    Mat d_y;
    double d_inv_temp = 0.0;
};

}  // namespace cloob
