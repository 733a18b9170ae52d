#pragma once

#include "cloob/hopfield.hpp"
#include "cloob/objectives_types.hpp"

#include <cstddef>
#include <vector>

namespace cloob::diag {

struct DiagnosticsReport {
    std::size_t effective_eig_count_x = 0;
    std::size_t effective_eig_count_y = 0;
    double ajne_x = 0.0;
    double ajne_y = 0.0;
    Vec matched_sims;
    Vec topk_unmatched_sims;  // per anchor, k entries each, anchor-major
    double var_uxuy = 0.0;    // var of U_x^T U_y matched dots
    double var_vxvy = 0.0;
    double var_uxvy = 0.0;
};

/// Smallest k such that the top-k eigenvalues of the row covariance
/// (mean-centered, divisor N) reach `threshold` of the eigenvalue sum.
/// Negative eigenvalues below 1e-12 are clamped to zero.
std::size_t effective_eigenvalue_count(const EmbeddingBatch& embeddings,
                                       double threshold = 0.99);

/// Ajne sphere-uniformity statistic
/// A_n = n/4 - (1/(pi n)) sum_i sum_{j>i} arccos(x_j . x_i),
/// dots clamped to [-1, 1]. Larger means less uniform.
double ajne_statistic(const EmbeddingBatch& embeddings);

struct SimilarityHistograms {
    Vec matched;            // diag of the cosine matrix
    std::vector<Vec> topk;  // per anchor, k largest off-diagonal sims desc
};
SimilarityHistograms similarity_histograms(const EmbeddingBatch& x, const EmbeddingBatch& y,
                                           std::size_t k);

struct DotVariances {
    double var_uxuy = 0.0;
    double var_vxvy = 0.0;
    double var_uxvy = 0.0;
};
/// Empirical variances of the matched-pair dot products of renormalized
/// retrievals: U_x.U_y, V_x.V_y and the cross form U_x.V_y.
DotVariances dot_variance_report(const EmbeddingBatch& x, const EmbeddingBatch& y,
                                 const hopfield::HopfieldMemory& mem_u,
                                 const hopfield::HopfieldMemory& mem_v);

}  // namespace cloob::diag
