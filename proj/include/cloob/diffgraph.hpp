#pragma once

#include "cloob/mat.hpp"

#include <functional>
#include <vector>

namespace cloob::graph {

/// Minimal reverse-mode tape over a fixed op set: enough to express the
/// dual-encoder forward pass, Hopfield retrieval, renormalization and the
/// contrastive losses. Nodes are appended in topological order; backward
/// visits them once, in reverse insertion order.
class Tape {
public:
    int leaf(Mat value);
    int matmul(int a, int b);
    int add(int a, int b);
    int scale(int a, double c);
    /// Row-wise soft(beta * row).
    int row_softmax(int a, double beta);
    /// Per-row lse(beta, row), returned as an n x 1 column.
    int lse_rows(int a, double beta);
    int l2_normalize_rows(int a);
    int tanh(int a);
    int transpose(int a);
    /// Mean of all entries, as a 1 x 1 scalar node.
    int mean_scalar(int a);
    /// Contrastive direction loss over a similarity matrix S:
    /// mean_i [ -tau^-1 S_ii + ln sum_{j in D(i)} exp(tau^-1 S_ij) ],
    /// with D(i) the full row (InfoNCE) or the row without i (InfoLOOB).
    /// Column-denominator terms are expressed via transpose(S).
    int neg_log_ratio_loss(int sims, double inv_temp, bool exclude_diag);

    const Mat& value(int id) const;

    /// Reverse pass from a scalar loss node; fills every node's adjoint.
    void backward(int loss_node);

    /// Adjoint of a node (typically a leaf) after backward().
    const Mat& grad(int id) const;

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        leaf,
        matmul,
        add,
        scale,
        row_softmax,
        lse_rows,
        l2norm,
        tanh_op,
        transpose_op,
        mean_scalar,
        nlr_loss,
    };

    struct Node {
        Op op;
        std::vector<int> inputs;
        Mat value;
        Mat adjoint;
        double c = 0.0;     // scale factor / beta / inv_temp
        bool flag = false;  // exclude_diag
    };

    int push(Node n);
    const Node& at(int id) const;
    Node& at(int id);

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

/// Central-difference check of analytic gradients. `fn` evaluates the
/// scalar loss at a parameter list; `analytic` must be shaped like
/// `params`. Returns the max relative error with denominator
/// max(|analytic|, |numeric|, 1e-8). Throws on a non-finite probe,
/// naming the parameter and coordinate.
double finite_diff_check(const std::function<double(const std::vector<Mat>&)>& fn,
                         std::vector<Mat> params, const std::vector<Mat>& analytic,
                         double h = 1e-5);

}  // namespace cloob::graph
