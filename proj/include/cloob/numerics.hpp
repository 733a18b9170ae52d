#pragma once

#include "cloob/mat.hpp"
#include "cloob/rng.hpp"

namespace cloob::num {

/// soft(beta * a) with max-subtraction. beta = 0 gives the uniform
/// distribution. Output sums to 1 within 1e-12.
Vec softmax(double beta, const Vec& a);

/// lse(beta, a) = beta^-1 ln sum_i exp(beta a_i), max-subtracted.
/// Requires beta > 0.
double lse(double beta, const Vec& a);

/// Scales every row to unit Euclidean norm. A row with norm <= 1e-12 is a
/// degenerate input and throws, naming the row index.
Mat l2_normalize_rows(const Mat& m);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending. Input must be symmetric within 1e-10.
Vec sym_eigenvalues(const Mat& s);

/// Largest singular value via power iteration on m^T m from a fixed seeded
/// start vector. Zero matrix gives 0.
double spectral_norm(const Mat& m, std::size_t iters = 10000, double tol = 1e-10);

// Dense helpers shared across modules.
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
Mat add(const Mat& a, const Mat& b);
Mat scale(const Mat& m, double c);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);

/// m * v for v of length m.cols().
Vec matvec(const Mat& m, const Vec& v);
/// m^T * v for v of length m.rows().
Vec matvec_t(const Mat& m, const Vec& v);

}  // namespace cloob::num
