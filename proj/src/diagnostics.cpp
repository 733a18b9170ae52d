#include "cloob/diagnostics.hpp"

#include "cloob/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cloob::diag {

std::size_t effective_eigenvalue_count(const EmbeddingBatch& embeddings, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw std::invalid_argument("effective_eigenvalue_count: threshold must be in (0, 1]");
    const Mat& rows = embeddings.rows();
    const std::size_t n = rows.rows();
    const std::size_t d = rows.cols();

    Vec mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += rows(i, c);
    for (double& m : mean) m /= static_cast<double>(n);

    Mat cov(d, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            double da = rows(i, a) - mean[a];
            for (std::size_t b = 0; b < d; ++b)
                cov(a, b) += da * (rows(i, b) - mean[b]);
        }
    for (double& v : cov.raw()) v /= static_cast<double>(n);

    Vec eig = num::sym_eigenvalues(cov);
    double total = 0.0;
    for (double& l : eig) {
        if (l < 1e-12) l = 0.0;
        total += l;
    }
    if (total <= 0.0)
        throw std::invalid_argument("effective_eigenvalue_count: degenerate all-zero covariance");
    double cum = 0.0;
    for (std::size_t k = 0; k < eig.size(); ++k) {
        cum += eig[k];
        if (cum >= threshold * total) return k + 1;
    }
    return eig.size();
}

double ajne_statistic(const EmbeddingBatch& embeddings) {
    const Mat& rows = embeddings.rows();
    const std::size_t n = rows.rows();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = num::dot(rows.row(i), rows.row(j));
            dot = std::clamp(dot, -1.0, 1.0);
            acc += std::acos(dot);
        }
    const double nn = static_cast<double>(n);
    return nn / 4.0 - acc / (std::numbers::pi * nn);
}

SimilarityHistograms similarity_histograms(const EmbeddingBatch& x, const EmbeddingBatch& y,
                                           std::size_t k) {
    const Mat& xr = x.rows();
    const Mat& yr = y.rows();
    if (xr.rows() != yr.rows() || xr.cols() != yr.cols())
        throw std::invalid_argument("similarity_histograms: batch shape mismatch " +
                                    xr.shape_str() + " vs " + yr.shape_str());
    const std::size_t n = xr.rows();
    if (k < 1 || k > n - 1)
        throw std::invalid_argument("similarity_histograms: k must be in [1, N-1]");

    SimilarityHistograms out;
    out.matched.reserve(n);
    out.topk.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec sims(n);
        for (std::size_t j = 0; j < n; ++j) sims[j] = num::dot(xr.row(i), yr.row(j));
        out.matched.push_back(sims[i]);
        std::vector<std::size_t> idx;
        idx.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) idx.push_back(j);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (sims[a] != sims[b]) return sims[a] > sims[b];
            return a < b;
        });
        Vec top(k);
        for (std::size_t t = 0; t < k; ++t) top[t] = sims[idx[t]];
        out.topk.push_back(std::move(top));
    }
    return out;
}

namespace {

double matched_dot_variance(const EmbeddingBatch& a, const EmbeddingBatch& b) {
    const std::size_t n = a.rows().rows();
    Vec dots(n);
    for (std::size_t i = 0; i < n; ++i)
        dots[i] = num::dot(a.rows().row(i), b.rows().row(i));
    double mean = 0.0;
    for (double v : dots) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : dots) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(n);
}

}  // namespace

DotVariances dot_variance_report(const EmbeddingBatch& x, const EmbeddingBatch& y,
                                 const hopfield::HopfieldMemory& mem_u,
                                 const hopfield::HopfieldMemory& mem_v) {
    EmbeddingBatch ux = hopfield::retrieve_batch(mem_u, x);
    EmbeddingBatch uy = hopfield::retrieve_batch(mem_u, y);
    EmbeddingBatch vx = hopfield::retrieve_batch(mem_v, x);
    EmbeddingBatch vy = hopfield::retrieve_batch(mem_v, y);
    DotVariances out;
    out.var_uxuy = matched_dot_variance(ux, uy);
    out.var_vxvy = matched_dot_variance(vx, vy);
    out.var_uxvy = matched_dot_variance(ux, vy);
    return out;
}

}  // namespace cloob::diag
