#include "cloob/hopfield.hpp"

#include <cmath>
#include <stdexcept>

namespace cloob::hopfield {

using num::matvec;
using num::matvec_t;
using num::norm2;

HopfieldMemory::HopfieldMemory(Mat patterns, double beta)
    : patterns_(std::move(patterns)), beta_(beta) {
    if (beta_ < 0.0 || !std::isfinite(beta_))
        throw std::invalid_argument("HopfieldMemory: beta must be finite and >= 0");
    max_norm_ = 0.0;
    for (std::size_t j = 0; j < patterns_.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < patterns_.rows(); ++i)
            s += patterns_(i, j) * patterns_(i, j);
        double n = std::sqrt(s);
        if (std::fabs(n - 1.0) > 1e-10)
            throw std::invalid_argument("HopfieldMemory: stored column " + std::to_string(j) +
                                        " is not unit-norm");
        max_norm_ = std::max(max_norm_, n);
    }
}

Vec HopfieldMemory::stored(std::size_t i) const {
    if (i >= count())
        throw std::invalid_argument("HopfieldMemory::stored: index out of range");
    Vec u(dim());
    for (std::size_t r = 0; r < dim(); ++r) u[r] = patterns_(r, i);
    return u;
}

HopfieldMemory HopfieldMemory::from_batch(const EmbeddingBatch& batch, double beta) {
    return HopfieldMemory(num::transpose(batch.rows()), beta);
}

Vec retrieve(const HopfieldMemory& mem, const Vec& query) {
    if (query.size() != mem.dim())
        throw std::invalid_argument("retrieve: query dimension " +
                                    std::to_string(query.size()) + " != " +
                                    std::to_string(mem.dim()));
    double qn = norm2(query);
    if (std::fabs(qn - 1.0) > 1e-8)
        throw std::invalid_argument("retrieve: query is not unit-norm");
    Vec sims = matvec_t(mem.patterns(), query);  // U^T q
    Vec p = num::softmax(mem.beta(), sims);
    return matvec(mem.patterns(), p);
}

EmbeddingBatch retrieve_batch(const HopfieldMemory& mem, const EmbeddingBatch& queries,
                              bool renormalize) {
    Mat out(queries.n(), mem.dim(), 0.0);
    for (std::size_t i = 0; i < queries.n(); ++i) {
        Vec r = retrieve(mem, queries.row(i));
        if (renormalize) {
            double n = norm2(r);
            if (n <= 1e-12)
                throw std::invalid_argument(
                    "retrieve_batch: degenerate retrieval (zero vector) for row " +
                    std::to_string(i));
            for (double& v : r) v /= n;
        }
        out.set_row(i, r);
    }
    return renormalize ? EmbeddingBatch(std::move(out)) : EmbeddingBatch::unchecked(std::move(out));
}

std::pair<Vec, std::size_t> iterate_to_fixed_point(const HopfieldMemory& mem, const Vec& xi0,
                                                   double tol, std::size_t max_iter) {
    if (!(tol > 0.0))
        throw std::invalid_argument("iterate_to_fixed_point: tol must be > 0");
    Vec xi = xi0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Vec sims = matvec_t(mem.patterns(), xi);
        Vec p = num::softmax(mem.beta(), sims);
        Vec next = matvec(mem.patterns(), p);
        double diff = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) {
            double d = next[k] - xi[k];
            diff += d * d;
        }
        xi = std::move(next);
        if (std::sqrt(diff) < tol) return {xi, it};
    }
    throw std::runtime_error("iterate_to_fixed_point: no convergence after " +
                             std::to_string(max_iter) + " iterations");
}

double separation(const HopfieldMemory& mem, std::size_t i) {
    if (mem.count() < 2)
        throw std::invalid_argument("separation: needs at least two stored patterns");
    if (i >= mem.count())
        throw std::invalid_argument("separation: index out of range");
    Vec ui = mem.stored(i);
    double uii = num::dot(ui, ui);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < mem.count(); ++j) {
        if (j == i) continue;
        best = std::min(best, uii - num::dot(ui, mem.stored(j)));
    }
    return best;
}

double one_update_error_bound(const HopfieldMemory& mem, const Vec& xi, std::size_t i,
                              const Vec& fixed_point) {
    Vec ui = mem.stored(i);
    double d_xi = 0.0, d_fp = 0.0;
    for (std::size_t k = 0; k < ui.size(); ++k) {
        d_xi += (xi[k] - ui[k]) * (xi[k] - ui[k]);
        d_fp += (fixed_point[k] - ui[k]) * (fixed_point[k] - ui[k]);
    }
    double mx = std::max(std::sqrt(d_xi), std::sqrt(d_fp));
    double delta = mem.count() >= 2 ? separation(mem, i) : std::numeric_limits<double>::infinity();
    double m = static_cast<double>(mem.count());
    double exponent = -mem.beta() * (delta - 2.0 * mx * mem.max_norm());
    return 2.0 * (m - 1.0) * std::exp(exponent) * mem.max_norm();
}

Mat softmax_jacobian(double beta, const Vec& p) {
    if (p.empty())
        throw std::invalid_argument("softmax_jacobian: empty vector");
    double sum = 0.0;
    for (double v : p) {
        if (v < -1e-10 || v > 1.0 + 1e-10)
            throw std::invalid_argument("softmax_jacobian: entry outside [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-10)
        throw std::invalid_argument("softmax_jacobian: entries do not sum to 1");
    const std::size_t n = p.size();
    Mat j(n, n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            j(r, c) = beta * ((r == c ? p[r] : 0.0) - p[r] * p[c]);
    return j;
}

Mat mean_jacobian(double beta, const Vec& a, double tol) {
    if (!(tol > 0.0))
        throw std::invalid_argument("mean_jacobian: tol must be > 0");
    for (double v : a)
        if (!std::isfinite(v))
            throw std::invalid_argument("mean_jacobian: non-finite input");
    const std::size_t n = a.size();

    auto integrand = [&](double lambda) {
        Vec p = num::softmax(lambda * beta, a);
        return softmax_jacobian(beta, p);
    };

    auto simpson = [&](std::size_t panels) {
        double h = 1.0 / static_cast<double>(panels);
        Mat acc(n, n, 0.0);
        for (std::size_t k = 0; k <= panels; ++k) {
            double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            Mat j = integrand(h * static_cast<double>(k));
            for (std::size_t t = 0; t < acc.size(); ++t) acc.raw()[t] += w * j.raw()[t];
        }
        for (double& v : acc.raw()) v *= h / 3.0;
        return acc;
    };

    std::size_t panels = 16;
    Mat prev = simpson(panels);
    while (panels <= (1u << 20)) {
        panels *= 2;
        Mat cur = simpson(panels);
        double diff = 0.0;
        for (std::size_t t = 0; t < cur.size(); ++t)
            diff = std::max(diff, std::fabs(cur.raw()[t] - prev.raw()[t]));
        if (diff < tol) return cur;
        prev = std::move(cur);
    }
    throw std::runtime_error("mean_jacobian: quadrature did not converge below tol");
}

Mat weighted_covariance(const HopfieldMemory& mem, const Vec& query, double tol) {
    Vec a = matvec_t(mem.patterns(), query);  // U^T q
    Mat jm = mean_jacobian(mem.beta(), a, tol);
    return num::matmul(num::matmul(mem.patterns(), jm), num::transpose(mem.patterns()));
}

CovDecomposition decompose_dot(const HopfieldMemory& mem, const Vec& x, const Vec& y,
                               double tol) {
    Vec rx = retrieve(mem, x);
    Vec ry = retrieve(mem, y);
    double lhs = num::dot(rx, ry);

    const double m = static_cast<double>(mem.count());
    Vec mean(mem.dim(), 0.0);
    for (std::size_t r = 0; r < mem.dim(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < mem.count(); ++c) s += mem.patterns()(r, c);
        mean[r] = s / m;
    }
    Mat cov_x = weighted_covariance(mem, x, tol);
    Mat cov_y = weighted_covariance(mem, y, tol);

    Vec left = matvec(cov_x, x);
    Vec right = matvec(cov_y, y);
    for (std::size_t r = 0; r < mem.dim(); ++r) {
        left[r] += mean[r];
        right[r] += mean[r];
    }
    double rhs = num::dot(left, right);
    return CovDecomposition{std::move(mean), std::move(cov_x), std::move(cov_y), lhs, rhs, tol};
}

}  // namespace cloob::hopfield
