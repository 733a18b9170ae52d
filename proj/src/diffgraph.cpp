#include "cloob/diffgraph.hpp"

#include "cloob/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace cloob::graph {

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("Tape: node id out of range");
    return nodes_[id];
}

Tape::Node& Tape::at(int id) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->at(id));
}

int Tape::leaf(Mat value) {
    return push(Node{Op::leaf, {}, std::move(value), Mat{}, 0.0, false});
}

int Tape::matmul(int a, int b) {
    const Mat& va = at(a).value;
    const Mat& vb = at(b).value;
    if (va.cols() != vb.rows())
        throw std::invalid_argument("Tape::matmul: shape mismatch " + va.shape_str() + " * " +
                                    vb.shape_str());
    return push(Node{Op::matmul, {a, b}, num::matmul(va, vb), Mat{}, 0.0, false});
}

int Tape::add(int a, int b) {
    const Mat& va = at(a).value;
    const Mat& vb = at(b).value;
    if (!va.same_shape(vb))
        throw std::invalid_argument("Tape::add: shape mismatch " + va.shape_str() + " + " +
                                    vb.shape_str());
    return push(Node{Op::add, {a, b}, num::add(va, vb), Mat{}, 0.0, false});
}

int Tape::scale(int a, double c) {
    return push(Node{Op::scale, {a}, num::scale(at(a).value, c), Mat{}, c, false});
}

int Tape::row_softmax(int a, double beta) {
    const Mat& v = at(a).value;
    Mat out(v.rows(), v.cols(), 0.0);
    for (std::size_t r = 0; r < v.rows(); ++r)
        out.set_row(r, num::softmax(beta, v.row(r)));
    return push(Node{Op::row_softmax, {a}, std::move(out), Mat{}, beta, false});
}

int Tape::lse_rows(int a, double beta) {
    if (!(beta > 0.0))
        throw std::invalid_argument("Tape::lse_rows: beta must be > 0");
    const Mat& v = at(a).value;
    Mat out(v.rows(), 1, 0.0);
    for (std::size_t r = 0; r < v.rows(); ++r) out(r, 0) = num::lse(beta, v.row(r));
    return push(Node{Op::lse_rows, {a}, std::move(out), Mat{}, beta, false});
}

int Tape::l2_normalize_rows(int a) {
    return push(Node{Op::l2norm, {a}, num::l2_normalize_rows(at(a).value), Mat{}, 0.0, false});
}

int Tape::tanh(int a) {
    Mat out = at(a).value;
    for (double& v : out.raw()) v = std::tanh(v);
    return push(Node{Op::tanh_op, {a}, std::move(out), Mat{}, 0.0, false});
}

int Tape::transpose(int a) {
    return push(Node{Op::transpose_op, {a}, num::transpose(at(a).value), Mat{}, 0.0, false});
}

int Tape::mean_scalar(int a) {
    const Mat& v = at(a).value;
    double s = 0.0;
    for (double x : v.raw()) s += x;
    Mat out(1, 1, s / static_cast<double>(v.size()));
    return push(Node{Op::mean_scalar, {a}, std::move(out), Mat{}, 0.0, false});
}

int Tape::neg_log_ratio_loss(int sims, double inv_temp, bool exclude_diag) {
    const Mat& s = at(sims).value;
    if (s.rows() != s.cols())
        throw std::invalid_argument("Tape::neg_log_ratio_loss: similarity matrix not square (" +
                                    s.shape_str() + ")");
    if (!(inv_temp > 0.0))
        throw std::invalid_argument("Tape::neg_log_ratio_loss: inv_temp must be > 0");
    const std::size_t n = s.rows();
    if (exclude_diag && n < 2)
        throw std::invalid_argument("Tape::neg_log_ratio_loss: needs n >= 2 without diagonal");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec den;
        den.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (exclude_diag && j == i) continue;
            den.push_back(inv_temp * s(i, j));
        }
        total += -inv_temp * s(i, i) + num::lse(1.0, den);
    }
    Mat out(1, 1, total / static_cast<double>(n));
    return push(Node{Op::nlr_loss, {sims}, std::move(out), Mat{}, inv_temp, exclude_diag});
}

const Mat& Tape::value(int id) const {
    return at(id).value;
}

const Mat& Tape::grad(int id) const {
    if (!ran_backward_)
        throw std::logic_error("Tape::grad: backward() has not run");
    return at(id).adjoint;
}

void Tape::backward(int loss_node) {
    const Node& loss = at(loss_node);
    if (loss.value.rows() != 1 || loss.value.cols() != 1)
        throw std::invalid_argument("Tape::backward: loss node is not scalar");

    for (Node& n : nodes_) n.adjoint = Mat(n.value.rows(), n.value.cols(), 0.0);
    at(loss_node).adjoint(0, 0) = 1.0;

    for (int id = loss_node; id >= 0; --id) {
        Node& n = at(id);
        const Mat& g = n.adjoint;
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul: {
                Node& a = at(n.inputs[0]);
                Node& b = at(n.inputs[1]);
                Mat da = num::matmul(g, num::transpose(b.value));
                Mat db = num::matmul(num::transpose(a.value), g);
                a.adjoint = num::add(a.adjoint, da);
                b.adjoint = num::add(b.adjoint, db);
                break;
            }
            case Op::add:
                at(n.inputs[0]).adjoint = num::add(at(n.inputs[0]).adjoint, g);
                at(n.inputs[1]).adjoint = num::add(at(n.inputs[1]).adjoint, g);
                break;
            case Op::scale:
                at(n.inputs[0]).adjoint =
                    num::add(at(n.inputs[0]).adjoint, num::scale(g, n.c));
                break;
            case Op::row_softmax: {
                // per row: vjp = beta (p .* g - p (p . g))
                Node& a = at(n.inputs[0]);
                Mat da(g.rows(), g.cols(), 0.0);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    double pg = 0.0;
                    for (std::size_t c = 0; c < g.cols(); ++c) pg += n.value(r, c) * g(r, c);
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        da(r, c) = n.c * n.value(r, c) * (g(r, c) - pg);
                }
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
            case Op::lse_rows: {
                Node& a = at(n.inputs[0]);
                Mat da(a.value.rows(), a.value.cols(), 0.0);
                for (std::size_t r = 0; r < a.value.rows(); ++r) {
                    Vec p = num::softmax(n.c, a.value.row(r));
                    for (std::size_t c = 0; c < a.value.cols(); ++c)
                        da(r, c) = g(r, 0) * p[c];
                }
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
            case Op::l2norm: {
                // per row: vjp = (g - (g . xhat) xhat) / |x|
                Node& a = at(n.inputs[0]);
                Mat da(g.rows(), g.cols(), 0.0);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    double nr = 0.0;
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        nr += a.value(r, c) * a.value(r, c);
                    nr = std::sqrt(nr);
                    double gh = 0.0;
                    for (std::size_t c = 0; c < g.cols(); ++c) gh += g(r, c) * n.value(r, c);
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        da(r, c) = (g(r, c) - gh * n.value(r, c)) / nr;
                }
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
            case Op::tanh_op: {
                Node& a = at(n.inputs[0]);
                Mat da = g;
                for (std::size_t t = 0; t < da.size(); ++t)
                    da.raw()[t] *= 1.0 - n.value.raw()[t] * n.value.raw()[t];
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
            case Op::transpose_op:
                at(n.inputs[0]).adjoint =
                    num::add(at(n.inputs[0]).adjoint, num::transpose(g));
                break;
            case Op::mean_scalar: {
                Node& a = at(n.inputs[0]);
                double w = g(0, 0) / static_cast<double>(a.value.size());
                Mat da(a.value.rows(), a.value.cols(), 0.0);
                for (double& v : da.raw()) v = w;
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
            case Op::nlr_loss: {
                Node& a = at(n.inputs[0]);
                const Mat& s = a.value;
                const std::size_t nn = s.rows();
                const double inv_n = 1.0 / static_cast<double>(nn);
                Mat da(nn, nn, 0.0);
                for (std::size_t i = 0; i < nn; ++i) {
                    Vec den;
                    std::vector<std::size_t> idx;
                    den.reserve(nn);
                    for (std::size_t j = 0; j < nn; ++j) {
                        if (n.flag && j == i) continue;
                        den.push_back(n.c * s(i, j));
                        idx.push_back(j);
                    }
                    Vec p = num::softmax(1.0, den);
                    for (std::size_t k = 0; k < idx.size(); ++k)
                        da(i, idx[k]) += g(0, 0) * inv_n * n.c * p[k];
                    da(i, i) -= g(0, 0) * inv_n * n.c;
                }
                a.adjoint = num::add(a.adjoint, da);
                break;
            }
        }
    }
    ran_backward_ = true;
}

double finite_diff_check(const std::function<double(const std::vector<Mat>&)>& fn,
                         std::vector<Mat> params, const std::vector<Mat>& analytic,
                         double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("finite_diff_check: h must be > 0");
    if (analytic.size() != params.size())
        throw std::invalid_argument("finite_diff_check: gradient list shape mismatch");
    double max_rel = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!analytic[p].same_shape(params[p]))
            throw std::invalid_argument("finite_diff_check: gradient shape mismatch at param " +
                                        std::to_string(p));
        for (std::size_t t = 0; t < params[p].size(); ++t) {
            double orig = params[p].raw()[t];
            params[p].raw()[t] = orig + h;
            double fp = fn(params);
            params[p].raw()[t] = orig - h;
            double fm = fn(params);
            params[p].raw()[t] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("finite_diff_check: non-finite loss probing param " +
                                         std::to_string(p) + " coord " + std::to_string(t));
            double numeric = (fp - fm) / (2.0 * h);
            double a = analytic[p].raw()[t];
            double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace cloob::graph
