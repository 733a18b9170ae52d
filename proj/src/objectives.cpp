#include "cloob/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace cloob {

EmbeddingBatch::EmbeddingBatch(Mat rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 2)
        throw std::invalid_argument("EmbeddingBatch: needs at least 2 rows");
    for (std::size_t r = 0; r < rows_.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < rows_.cols(); ++c) s += rows_(r, c) * rows_(r, c);
        if (std::fabs(std::sqrt(s) - 1.0) > 1e-10)
            throw std::invalid_argument("EmbeddingBatch: row " + std::to_string(r) +
                                        " is not unit-norm");
    }
}

EmbeddingBatch EmbeddingBatch::unchecked(Mat rows) {
    return EmbeddingBatch(std::move(rows), unchecked_tag{});
}

namespace obj {

using num::matvec;

namespace {

// Pairwise similarities sims(i,j) = x_i^T y_j.
Mat cross_sims(const EmbeddingBatch& x, const EmbeddingBatch& y) {
    if (x.n() != y.n() || x.dim() != y.dim())
        throw std::invalid_argument("loss: batch shape mismatch " + x.rows().shape_str() +
                                    " vs " + y.rows().shape_str());
    return num::matmul(x.rows(), num::transpose(y.rows()));
}

// One loss direction over a similarity matrix: mean_i of
// -tau^-1 sims(a_idx) + ln sum_j exp(tau^-1 sims(den_idx)). `by_rows`
// selects whether the denominator runs over row i or column i, and
// `exclude_diag` drops j = i from it. Log-domain throughout.
double direction_loss(const Mat& sims, double inv_temp, bool by_rows, bool exclude_diag) {
    const std::size_t n = sims.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec den;
        den.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (exclude_diag && j == i) continue;
            den.push_back(inv_temp * (by_rows ? sims(i, j) : sims(j, i)));
        }
        total += -inv_temp * sims(i, i) + num::lse(1.0, den);
    }
    return total / static_cast<double>(n);
}

void fill_anchor_terms(const Mat& sims, double inv_temp, LossReport& rep, bool with_p1) {
    const std::size_t n = sims.rows();
    rep.per_anchor_alignment.resize(n);
    rep.per_anchor_uniformity.resize(n);
    if (with_p1) rep.p1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::exp(inv_temp * sims(i, i));
        double b = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) b += std::exp(inv_temp * sims(i, j));
        rep.per_anchor_alignment[i] = a;
        rep.per_anchor_uniformity[i] = b;
        if (with_p1) rep.p1[i] = a / (a + b);
    }
}

void check_loss_args(const EmbeddingBatch& x, const EmbeddingBatch& y, double inv_temp) {
    if (x.n() < 2)
        throw std::invalid_argument("loss: batch size must be >= 2");
    if (!(inv_temp > 0.0))
        throw std::invalid_argument("loss: inv_temp must be > 0");
    if (x.n() != y.n() || x.dim() != y.dim())
        throw std::invalid_argument("loss: batch shape mismatch");
}

}  // namespace

LossReport info_nce_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double inv_temp) {
    check_loss_args(x, y, inv_temp);
    Mat sims = cross_sims(x, y);
    LossReport rep;
    rep.inv_temp = inv_temp;
    rep.loss = direction_loss(sims, inv_temp, true, false) +
               direction_loss(sims, inv_temp, false, false);
    fill_anchor_terms(sims, inv_temp, rep, true);
    return rep;
}

LossReport info_loob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double inv_temp) {
    check_loss_args(x, y, inv_temp);
    Mat sims = cross_sims(x, y);
    LossReport rep;
    rep.inv_temp = inv_temp;
    rep.loss = direction_loss(sims, inv_temp, true, true) +
               direction_loss(sims, inv_temp, false, true);
    fill_anchor_terms(sims, inv_temp, rep, false);
    return rep;
}

LossReport cloob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y,
                      const hopfield::HopfieldMemory& mem_u,
                      const hopfield::HopfieldMemory& mem_v, double inv_temp,
                      bool scale_by_tau) {
    check_loss_args(x, y, inv_temp);
    EmbeddingBatch ux = hopfield::retrieve_batch(mem_u, x, true);
    EmbeddingBatch uy = hopfield::retrieve_batch(mem_u, y, true);
    EmbeddingBatch vx = hopfield::retrieve_batch(mem_v, x, true);
    EmbeddingBatch vy = hopfield::retrieve_batch(mem_v, y, true);

    Mat sims_u = cross_sims(ux, uy);  // U_{x_i}^T U_{y_j}
    Mat sims_v = cross_sims(vx, vy);  // V_{x_i}^T V_{y_j}

    LossReport rep;
    rep.inv_temp = inv_temp;
    // first term: anchor U_x rows, denominator over j != i of U_x_i^T U_y_j;
    // second term: anchor on the V_y side, denominator over j != i of
    // V_x_j^T V_y_i (column form, exactly as printed).
    rep.loss = direction_loss(sims_u, inv_temp, true, true) +
               direction_loss(sims_v, inv_temp, false, true);
    if (scale_by_tau) rep.loss /= inv_temp;
    fill_anchor_terms(sims_u, inv_temp, rep, false);
    return rep;
}

LossReport cloob_loss(const EmbeddingBatch& x, const EmbeddingBatch& y, double beta,
                      double inv_temp, bool scale_by_tau) {
    auto mem_u = hopfield::HopfieldMemory::from_batch(x, beta);
    auto mem_v = hopfield::HopfieldMemory::from_batch(y, beta);
    return cloob_loss(x, y, mem_u, mem_v, inv_temp, scale_by_tau);
}

LossReport loss_h_uvuv(const EmbeddingBatch& x, const EmbeddingBatch& y,
                       const hopfield::HopfieldMemory& mem_u,
                       const hopfield::HopfieldMemory& mem_v, double inv_temp) {
    check_loss_args(x, y, inv_temp);
    EmbeddingBatch ux = hopfield::retrieve_batch(mem_u, x, true);
    EmbeddingBatch vy = hopfield::retrieve_batch(mem_v, y, true);
    Mat sims = cross_sims(ux, vy);  // U_{x_i}^T V_{y_j}
    LossReport rep;
    rep.inv_temp = inv_temp;
    rep.loss = direction_loss(sims, inv_temp, true, true) +
               direction_loss(sims, inv_temp, false, true);
    fill_anchor_terms(sims, inv_temp, rep, false);
    return rep;
}

namespace {

void check_anchor_args(const Vec& anchor_y, const Vec& pos_x, const Mat& negs) {
    if (negs.rows() == 0)
        throw std::invalid_argument("anchor gradient: empty negatives");
    if (anchor_y.size() != pos_x.size() || negs.cols() != anchor_y.size())
        throw std::invalid_argument("anchor gradient: dimension mismatch");
}

}  // namespace

AnchorGrads grads_infoloob_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                                  double inv_temp) {
    check_anchor_args(anchor_y, pos_x, negs);
    const std::size_t d = anchor_y.size();
    Vec sims = matvec(negs, anchor_y);  // Xt^T y, negatives as rows
    Vec p = num::softmax(inv_temp, sims);

    AnchorGrads g;
    g.d_anchor.assign(d, 0.0);
    for (std::size_t j = 0; j < negs.rows(); ++j)
        for (std::size_t c = 0; c < d; ++c) g.d_anchor[c] += p[j] * negs(j, c);
    for (std::size_t c = 0; c < d; ++c)
        g.d_anchor[c] = inv_temp * (g.d_anchor[c] - pos_x[c]);

    g.d_pos.resize(d);
    for (std::size_t c = 0; c < d; ++c) g.d_pos[c] = -inv_temp * anchor_y[c];

    g.d_negs = Mat(negs.rows(), d, 0.0);
    for (std::size_t j = 0; j < negs.rows(); ++j)
        for (std::size_t c = 0; c < d; ++c) g.d_negs(j, c) = inv_temp * p[j] * anchor_y[c];
    return g;
}

Vec grad_infoloob_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                         double inv_temp) {
    return grads_infoloob_anchor(anchor_y, pos_x, negs, inv_temp).d_anchor;
}

std::pair<Vec, double> grad_infonce_anchor(const Vec& anchor_y, const Vec& pos_x,
                                           const Mat& negs, double inv_temp) {
    check_anchor_args(anchor_y, pos_x, negs);
    // p1 from the softmax over all N samples (positive first).
    Vec all_sims(negs.rows() + 1);
    all_sims[0] = num::dot(pos_x, anchor_y);
    Vec neg_sims = matvec(negs, anchor_y);
    for (std::size_t j = 0; j < negs.rows(); ++j) all_sims[j + 1] = neg_sims[j];
    double p1 = num::softmax(inv_temp, all_sims)[0];

    Vec g = grad_infoloob_anchor(anchor_y, pos_x, negs, inv_temp);
    for (double& v : g) v *= (1.0 - p1);
    return {std::move(g), p1};
}

AnchorGrads grads_infonce_anchor(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                                 double inv_temp) {
    check_anchor_args(anchor_y, pos_x, negs);
    const std::size_t d = anchor_y.size();
    Vec all_sims(negs.rows() + 1);
    all_sims[0] = num::dot(pos_x, anchor_y);
    Vec neg_sims = matvec(negs, anchor_y);
    for (std::size_t j = 0; j < negs.rows(); ++j) all_sims[j + 1] = neg_sims[j];
    Vec p = num::softmax(inv_temp, all_sims);

    AnchorGrads g;
    g.p1 = p[0];
    auto [dy, p1] = grad_infonce_anchor(anchor_y, pos_x, negs, inv_temp);
    g.d_anchor = std::move(dy);
    g.d_pos.resize(d);
    for (std::size_t c = 0; c < d; ++c) g.d_pos[c] = -inv_temp * (1.0 - p[0]) * anchor_y[c];
    g.d_negs = Mat(negs.rows(), d, 0.0);
    for (std::size_t j = 0; j < negs.rows(); ++j)
        for (std::size_t c = 0; c < d; ++c)
            g.d_negs(j, c) = inv_temp * p[j + 1] * anchor_y[c];
    return g;
}

Vec grad_infonce_anchor_direct(const Vec& anchor_y, const Vec& pos_x, const Mat& negs,
                               double inv_temp) {
    check_anchor_args(anchor_y, pos_x, negs);
    const std::size_t d = anchor_y.size();
    Vec all_sims(negs.rows() + 1);
    all_sims[0] = num::dot(pos_x, anchor_y);
    Vec neg_sims = matvec(negs, anchor_y);
    for (std::size_t j = 0; j < negs.rows(); ++j) all_sims[j + 1] = neg_sims[j];
    Vec p = num::softmax(inv_temp, all_sims);

    Vec g(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) g[c] = p[0] * pos_x[c];
    for (std::size_t j = 0; j < negs.rows(); ++j)
        for (std::size_t c = 0; c < d; ++c) g[c] += p[j + 1] * negs(j, c);
    for (std::size_t c = 0; c < d; ++c) g[c] = inv_temp * (g[c] - pos_x[c]);
    return g;
}

double grad_inv_temp(const Vec& anchor_y, const Vec& pos_x, const Mat& negs, double inv_temp,
                     GradVariant variant) {
    check_anchor_args(anchor_y, pos_x, negs);
    const std::size_t d = anchor_y.size();
    Vec avg(d, 0.0);
    if (variant == GradVariant::loob) {
        Vec p = num::softmax(inv_temp, matvec(negs, anchor_y));
        for (std::size_t j = 0; j < negs.rows(); ++j)
            for (std::size_t c = 0; c < d; ++c) avg[c] += p[j] * negs(j, c);
    } else {
        Vec all_sims(negs.rows() + 1);
        all_sims[0] = num::dot(pos_x, anchor_y);
        Vec neg_sims = matvec(negs, anchor_y);
        for (std::size_t j = 0; j < negs.rows(); ++j) all_sims[j + 1] = neg_sims[j];
        Vec p = num::softmax(inv_temp, all_sims);
        for (std::size_t c = 0; c < d; ++c) avg[c] = p[0] * pos_x[c];
        for (std::size_t j = 0; j < negs.rows(); ++j)
            for (std::size_t c = 0; c < d; ++c) avg[c] += p[j + 1] * negs(j, c);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += anchor_y[c] * (pos_x[c] - avg[c]);
    return -s;
}

}  // namespace obj
}  // namespace cloob
