#pragma once

#include "cloob/hopfield.hpp"
#include "cloob/objectives_types.hpp"

namespace cloob::obj {

/// Symmetric two-direction InfoNCE loss; denominators sum over all j
/// including the positive.
LossReport info_nce_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double inv_temp);

/// Symmetric two-direction InfoLOOB loss; denominators exclude j = i.
LossReport info_loob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double inv_temp);

/// CLOOB loss (H-UUVV): InfoLOOB on renormalized Hopfield retrievals, the
/// first term on U-retrievals and the second on V-retrievals. With
/// scale_by_tau (default) the result is multiplied by tau = 1/inv_temp.
LossReport cloob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y,
                      const hopfield::HopfieldMemory& mem_u,
                      const hopfield::HopfieldMemory& mem_v, double inv_temp,
                      bool scale_by_tau = true);

/// Convenience form that stores the minibatch itself in both memories.
LossReport cloob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double beta,
                      double inv_temp, bool scale_by_tau = true);

/// The rejected cross-memory variant (H-UVUV, dot products U_x^T V_y).
/// Kept only for the variance-comparison diagnostic; not a training loss.
LossReport loss_h_uvuv(const EmbeddingBatch& x, const EmbeddingBatch& y,
                       const hopfield::HopfieldMemory& mem_u,
                       const hopfield::HopfieldMemory& mem_v, double inv_temp);

/// Gradients of one anchor term of the InfoLOOB loss
/// -ln(f(x1,y)/sum_j f(x_j,y)), negatives as rows of `negs`.
struct AnchorGrads {
    Vec d_anchor;  // dL/dy
    Vec d_pos;     // dL/dx1 = -tau^-1 y
    Mat d_negs;    // dL/dx_j = tau^-1 p_j y
    double p1 = 0.0;
};

/// dL_InfoLOOB(y)/dy = -tau^-1 x1 + tau^-1 Xt soft(tau^-1 Xt^T y).
Vec grad_infoloob_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                         double inv_temp);
AnchorGrads grads_infoloob_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                                  double inv_temp);

/// dL_InfoNCE(y)/dy = (1 - p1) dL_InfoLOOB(y)/dy, p1 the softmax weight of
/// the positive among all N samples. Returned as the pair (gradient, p1).
std::pair<Vec, double> grad_infonce_anchor(const Vec& anchor_y, const Vec& pos_x,
                                           const Mat& negs, double inv_temp);
AnchorGrads grads_infonce_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                                 double inv_temp);

/// Direct-formula route -tau^-1 x1 + tau^-1 X soft(tau^-1 X^T y) with
/// X = [x1; negs]; independent of the scaled-InfoLOOB route above.
Vec grad_infonce_anchor_direct(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                               double inv_temp);

enum class GradVariant { nce, loob };

/// d/d tau^-1 of one anchor term: -y^T (x1 - S soft(tau^-1 S^T y)), with
/// the sample set S = {x1} + negs (nce) or negs only (loob).
double grad_inv_temp(const Vec& anchor_y, const Vec& pos_x, const Mat& negs, double inv_temp,
                     GradVariant variant);

}  // namespace cloob::obj
