#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cloob/numerics.hpp"
#include "cloob/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace cloob;

TEST_CASE("softmax constant input is uniform") {
    Vec p = num::softmax(1.0, {2.5, 2.5, 2.5});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax beta zero is uniform") {
    Vec p = num::softmax(0.0, {-3.0, 100.0, 0.5, 7.0});
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("softmax two-term oracle") {
    Vec p = num::softmax(8.0, {1.0, 0.0});
    double e8 = std::exp(8.0);
    CHECK(p[0] == doctest::Approx(e8 / (e8 + 1.0)).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1.0 / (e8 + 1.0)).epsilon(1e-14));
}

TEST_CASE("softmax rejects empty input and negative beta") {
    CHECK_THROWS_AS(num::softmax(1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(num::softmax(-1.0, {1.0}), std::invalid_argument);
}

TEST_CASE("softmax sums to one and is permutation equivariant") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + rng.next_below(16);
        double beta = 32.0 * rng.next_double();
        Vec a(n);
        for (double& v : a) v = 10.0 * rng.next_normal();
        Vec p = num::softmax(beta, a);
        double s = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::fabs(s - 1.0) <= 1e-12);

        Vec ar(a.rbegin(), a.rend());
        Vec pr = num::softmax(beta, ar);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(pr[i] == doctest::Approx(p[n - 1 - i]).epsilon(1e-13));
    }
}

TEST_CASE("lse constant case") {
    CHECK(num::lse(1.0, {1.7, 1.7, 1.7, 1.7, 1.7}) ==
          doctest::Approx(1.7 + std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("lse large beta approaches max") {
    CHECK(num::lse(1e6, {1.0, 2.0, 3.0}) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("lse direct oracle") {
    CHECK(num::lse(2.0, {0.0, 1.0}) ==
          doctest::Approx(0.5 * std::log(1.0 + std::exp(2.0))).epsilon(1e-14));
}

TEST_CASE("lse rejects nonpositive beta") {
    CHECK_THROWS_AS(num::lse(0.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(num::lse(-2.0, {1.0}), std::invalid_argument);
}

TEST_CASE("lse bracket property") {
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + rng.next_below(12);
        double beta = 1e-3 + 32.0 * rng.next_double();
        Vec a(n);
        for (double& v : a) v = 5.0 * rng.next_normal();
        double mx = *std::max_element(a.begin(), a.end());
        double l = num::lse(beta, a);
        CHECK(l >= mx - 1e-12);
        CHECK(l <= mx + std::log(static_cast<double>(n)) / beta + 1e-12);
    }
}

TEST_CASE("l2_normalize_rows 3-4-5 row") {
    Mat m(1, 2, 0.0);
    m(0, 0) = 3.0;
    m(0, 1) = 4.0;
    Mat out = num::l2_normalize_rows(m);
    CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("l2_normalize_rows idempotent") {
    Rng rng(13);
    Mat m(6, 5, 0.0);
    for (double& v : m.raw()) v = rng.next_normal();
    Mat once = num::l2_normalize_rows(m);
    Mat twice = num::l2_normalize_rows(once);
    for (std::size_t t = 0; t < once.size(); ++t)
        CHECK(std::fabs(once.raw()[t] - twice.raw()[t]) <= 1e-14);
    for (std::size_t r = 0; r < once.rows(); ++r)
        CHECK(std::fabs(num::norm2(once.row(r)) - 1.0) <= 1e-12);
}

TEST_CASE("l2_normalize_rows rejects a degenerate row") {
    Mat m(2, 2, 1.0);
    m(1, 0) = 1e-300;
    m(1, 1) = 0.0;
    CHECK_THROWS_WITH_AS(num::l2_normalize_rows(m),
                         doctest::Contains("row 1"), std::invalid_argument);
}

TEST_CASE("sym_eigenvalues identity and diagonal") {
    Mat id(3, 3, 0.0);
    for (int i = 0; i < 3; ++i) id(i, i) = 1.0;
    Vec e = num::sym_eigenvalues(id);
    for (double v : e) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    Mat d(3, 3, 0.0);
    d(0, 0) = 5.0;
    d(1, 1) = 2.0;
    d(2, 2) = -1.0;
    Vec ed = num::sym_eigenvalues(d);
    CHECK(ed[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(ed[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ed[2] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("sym_eigenvalues 2x2 hand case") {
    Mat m(2, 2, 1.0);
    m(0, 0) = 2.0;
    m(1, 1) = 2.0;
    Vec e = num::sym_eigenvalues(m);
    CHECK(e[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eigenvalues rejects asymmetry") {
    Mat m(2, 2, 0.0);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(num::sym_eigenvalues(m), std::invalid_argument);
}

TEST_CASE("sym_eigenvalues trace and PSD properties") {
    Rng rng(14);
    for (int t = 0; t < 30; ++t) {
        std::size_t d = 2 + rng.next_below(7);
        Mat a(d + 2, d, 0.0);
        for (double& v : a.raw()) v = rng.next_normal();
        Mat s = num::matmul(num::transpose(a), a);
        Vec e = num::sym_eigenvalues(s);
        double trace = 0.0;
        for (std::size_t i = 0; i < d; ++i) trace += s(i, i);
        double sum = 0.0;
        for (double v : e) {
            CHECK(v >= -1e-10);
            sum += v;
        }
        CHECK(std::fabs(sum - trace) <= 1e-9 * std::max(1.0, std::fabs(trace)));
    }
}

TEST_CASE("spectral_norm identity, diagonal, rank-1") {
    Mat id(4, 4, 0.0);
    for (int i = 0; i < 4; ++i) id(i, i) = 1.0;
    CHECK(num::spectral_norm(id) == doctest::Approx(1.0).epsilon(1e-10));

    Mat d(2, 2, 0.0);
    d(0, 0) = 3.0;
    d(1, 1) = -7.0;
    CHECK(num::spectral_norm(d) == doctest::Approx(7.0).epsilon(1e-10));

    // u v^T with |u| = 2, |v| = 3
    Vec u{2.0, 0.0, 0.0};
    Vec v{0.0, 3.0};
    Mat r1(3, 2, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) r1(i, j) = u[i] * v[j];
    CHECK(num::spectral_norm(r1) == doctest::Approx(6.0).epsilon(1e-10));

    Mat z(3, 3, 0.0);
    CHECK(num::spectral_norm(z) == 0.0);
}

TEST_CASE("rng identical seeds give identical streams") {
    Rng a(987654321), b(987654321);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u32() == b.next_u32());
    Rng c(5), d(5);
    for (int i = 0; i < 100; ++i) CHECK(c.next_normal() == d.next_normal());
}

TEST_CASE("mat rejects non-finite entries") {
    Mat m(2, 2, 0.0);
    m.raw()[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(m.check_finite(), std::invalid_argument);
}
