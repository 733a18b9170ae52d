#include "cloob/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cloob::num {

Vec softmax(double beta, const Vec& a) {
    if (a.empty())
        throw std::invalid_argument("softmax: empty vector");
    if (beta < 0.0 || !std::isfinite(beta))
        throw std::invalid_argument("softmax: beta must be finite and >= 0");
    for (double v : a)
        if (!std::isfinite(v))
            throw std::invalid_argument("softmax: non-finite input");
    double mx = *std::max_element(a.begin(), a.end());
    Vec out(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = std::exp(beta * (a[i] - mx));
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

double lse(double beta, const Vec& a) {
    if (a.empty())
        throw std::invalid_argument("lse: empty vector");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("lse: beta must be finite and > 0");
    double mx = *std::max_element(a.begin(), a.end());
    double sum = 0.0;
    for (double v : a) sum += std::exp(beta * (v - mx));
    return mx + std::log(sum) / beta;
}

Mat l2_normalize_rows(const Mat& m) {
    Mat out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * m(r, c);
        double n = std::sqrt(s);
        if (n <= 1e-12)
            throw std::invalid_argument("l2_normalize_rows: degenerate (near-zero) row " +
                                        std::to_string(r));
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) / n;
    }
    return out;
}

Vec sym_eigenvalues(const Mat& s) {
    if (s.rows() != s.cols())
        throw std::invalid_argument("sym_eigenvalues: matrix not square (" + s.shape_str() + ")");
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > 1e-10)
                throw std::invalid_argument("sym_eigenvalues: asymmetry beyond 1e-10 at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
    Mat a = s;
    // symmetrize to kill sub-tolerance noise
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    auto offdiag_fro = [&]() {
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s2 += a(i, j) * a(i, j);
        return std::sqrt(s2);
    };

    const std::size_t max_sweeps = 200;
    for (std::size_t sweep = 0; sweep < max_sweeps && offdiag_fro() >= 1e-12; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double app = a(p, p), aqq = a(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }

    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

double spectral_norm(const Mat& m, std::size_t iters, double tol) {
    const std::size_t nc = m.cols();
    Rng rng(0x5eedULL);
    Vec v(nc);
    for (auto& x : v) x = rng.next_normal();
    double vn = norm2(v);
    if (vn == 0.0) v[0] = 1.0, vn = 1.0;
    for (auto& x : v) x /= vn;

    double lambda_prev = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        Vec mv = matvec(m, v);
        Vec w = matvec_t(m, mv);  // (m^T m) v
        double lambda = dot(v, w);
        double wn = norm2(w);
        if (wn == 0.0) return 0.0;
        for (std::size_t i = 0; i < nc; ++i) v[i] = w[i] / wn;
        if (it > 0 && std::fabs(lambda - lambda_prev) <= tol * std::max(1.0, std::fabs(lambda)))
            return std::sqrt(std::max(0.0, lambda));
        lambda_prev = lambda;
    }
    return std::sqrt(std::max(0.0, lambda_prev));
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " +
                                    b.shape_str());
    Mat out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            double* orow = out.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Mat transpose(const Mat& m) {
    Mat out(m.cols(), m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

Mat add(const Mat& a, const Mat& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("add: shape mismatch " + a.shape_str() + " + " +
                                    b.shape_str());
    Mat out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += b.raw()[i];
    return out;
}

Mat scale(const Mat& m, double c) {
    Mat out = m;
    for (double& v : out.raw()) v *= c;
    return out;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) {
    return std::sqrt(dot(a, a));
}

Vec matvec(const Mat& m, const Vec& v) {
    if (v.size() != m.cols())
        throw std::invalid_argument("matvec: length mismatch");
    Vec out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

Vec matvec_t(const Mat& m, const Vec& v) {
    if (v.size() != m.rows())
        throw std::invalid_argument("matvec_t: length mismatch");
    Vec out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double vi = v[i];
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j] * vi;
    }
    return out;
}

}  // namespace cloob::num
