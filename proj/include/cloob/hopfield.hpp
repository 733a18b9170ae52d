#pragma once

#include "cloob/mat.hpp"
#include "cloob/numerics.hpp"
#include "cloob/objectives_types.hpp"

#include <cstddef>
#include <utility>

namespace cloob::hopfield {

/// Continuous modern Hopfield memory. Stored patterns are the columns of
/// `patterns` (d_e x M), each unit-norm. `beta` is the inverse temperature
/// of the retrieval softmax; `max_norm` the largest stored-pattern norm
/// (named so to avoid clashing with the pattern count M).
class HopfieldMemory {
public:
    HopfieldMemory(Mat patterns, double beta);

    const Mat& patterns() const { return patterns_; }
    double beta() const { return beta_; }
    double max_norm() const { return max_norm_; }
    std::size_t dim() const { return patterns_.rows(); }
    std::size_t count() const { return patterns_.cols(); }

    Vec stored(std::size_t i) const;

    /// Builds a memory that stores the rows of a batch as columns.
    static HopfieldMemory from_batch(const EmbeddingBatch& batch, double beta);

private:
    Mat patterns_;
    double beta_;
    double max_norm_;
};

/// Weighted-covariance decomposition of a retrieved dot product
/// U_x^T U_y = (u_mean + Cov(U,x) x)^T (u_mean + Cov(U,y) y).
struct CovDecomposition {
    Vec mean;
    Mat cov_x;
    Mat cov_y;
    double lhs;
    double rhs;
    double tol;
};

/// One retrieval step U soft(beta U^T query). Result lies in the convex
/// hull of the stored patterns.
Vec retrieve(const HopfieldMemory& mem, const Vec& query);

/// Per-row retrieval of a batch; renormalize (default on) scales each
/// output row back to unit norm, matching the CLOOB forward pass.
EmbeddingBatch retrieve_batch(const HopfieldMemory& mem, const EmbeddingBatch& queries,
                              bool renormalize = true);

/// Iterates xi <- U soft(beta U^T xi) to a fixed point. Throws on
/// non-convergence, carrying the last iterate in the message.
std::pair<Vec, std::size_t> iterate_to_fixed_point(const HopfieldMemory& mem, const Vec& xi0,
                                                   double tol = 1e-12,
                                                   std::size_t max_iter = 1000);

/// Separation Delta_i = min_{j != i} (u_i^T u_i - u_i^T u_j). Needs M >= 2.
double separation(const HopfieldMemory& mem, std::size_t i);

/// Retrieval-error bound after one update:
/// 2 (M-1) exp(-beta (Delta_i - 2 max{|xi - u_i|, |u_i* - u_i|} max_norm)) max_norm.
/// May be vacuous (> 2) for poorly separated pattern sets.
double one_update_error_bound(const HopfieldMemory& mem, const Vec& xi, std::size_t i,
                              const Vec& fixed_point);

/// J(beta a) = beta (diag(p) - p p^T) evaluated at a probability vector p.
Mat softmax_jacobian(double beta, const Vec& p);

/// Mean Jacobian J^m(beta a) = integral over lambda in [0,1] of
/// beta (diag(p_l) - p_l p_l^T) with p_l = soft(lambda beta a), by
/// composite Simpson with doubling panel counts.
Mat mean_jacobian(double beta, const Vec& a, double tol = 1e-10);

/// Weighted covariance Cov(U, query) = U J^m(beta U^T query) U^T.
Mat weighted_covariance(const HopfieldMemory& mem, const Vec& query, double tol = 1e-10);

/// Both sides of the covariance decomposition of retrieve(x)^T retrieve(y)
/// (un-renormalized retrievals).
CovDecomposition decompose_dot(const HopfieldMemory& mem, const Vec& x, const Vec& y,
                               double tol = 1e-10);

}  // namespace cloob::hopfield
