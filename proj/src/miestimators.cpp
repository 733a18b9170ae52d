#include "cloob/miestimators.hpp"

#include "cloob/numerics.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace cloob::mi {

namespace {

double mean_of(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of(const Vec& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double var = ss / static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}

EstimatorReport make_report(const Vec& per_batch, std::size_t n, std::string variant) {
    EstimatorReport rep;
    rep.estimate = mean_of(per_batch);
    rep.stderr_ = stderr_of(per_batch, rep.estimate);
    rep.n_batches = per_batch.size();
    rep.batch_size = n;
    rep.variant = std::move(variant);
    return rep;
}

void check_batch_args(std::size_t n, std::size_t batches) {
    if (n < 2) throw std::invalid_argument("mi: batch size must be >= 2");
    if (batches < 2) throw std::invalid_argument("mi: need at least two batches");
}

// One batch of the pair-form estimator. include_diag selects the 1/N
// InfoNCE denominator; otherwise the leave-one-out 1/(N-1) form.
double batch_contrastive(const Mat& xs, const Mat& ys, const LogCritic& critic,
                         bool include_diag) {
    const std::size_t n = xs.rows();
    Mat lf(n, n, 0.0);  // lf(j, i) = ln f(x_j, y_i)
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) lf(j, i) = critic(xs.row(j), ys.row(i));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec den;
        den.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (!include_diag && j == i) continue;
            den.push_back(lf(j, i));
        }
        double log_avg = num::lse(1.0, den) - std::log(static_cast<double>(den.size()));
        total += lf(i, i) - log_avg;
    }
    return total / static_cast<double>(n);
}

double batch_de(const Mat& xs, const Mat& ys, const LogCritic& critic,
                const std::function<double(const Vec&)>& log_z) {
    const std::size_t n = xs.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec den;
        den.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            den.push_back(critic(xs.row(j), ys.row(i)));
        }
        double log_avg = num::lse(1.0, den) - std::log(static_cast<double>(den.size()));
        total += log_z(ys.row(i)) - log_avg;
    }
    return total / static_cast<double>(n);
}

}  // namespace

GaussianPairModel::GaussianPairModel(std::size_t dim, double rho) : dim(dim), rho(rho) {
    if (dim == 0) throw std::invalid_argument("GaussianPairModel: dim must be >= 1");
    if (!(rho > -1.0 && rho < 1.0))
        throw std::invalid_argument("GaussianPairModel: rho must lie in (-1, 1)");
}

std::pair<Mat, Mat> sample_pairs(const GaussianPairModel& model, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("sample_pairs: n must be >= 1");
    const double s = std::sqrt(1.0 - model.rho * model.rho);
    Mat xs(n, model.dim, 0.0);
    Mat ys(n, model.dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < model.dim; ++c) {
            double x = rng.next_normal();
            double eps = rng.next_normal();
            xs(i, c) = x;
            ys(i, c) = model.rho * x + s * eps;
        }
    return {std::move(xs), std::move(ys)};
}

double true_mi(const GaussianPairModel& model) {
    return -0.5 * static_cast<double>(model.dim) * std::log(1.0 - model.rho * model.rho);
}

double log_analytic_critic(const GaussianPairModel& model, const Vec& x, const Vec& y) {
    if (x.size() != model.dim || y.size() != model.dim)
        throw std::invalid_argument("log_analytic_critic: dimension mismatch");
    const double var = 1.0 - model.rho * model.rho;
    double q = 0.0;
    for (std::size_t c = 0; c < model.dim; ++c) {
        double r = y[c] - model.rho * x[c];
        q += r * r;
    }
    const double d = static_cast<double>(model.dim);
    return -0.5 * q / var - 0.5 * d * std::log(2.0 * std::numbers::pi * var);
}

LogCritic analytic_critic(const GaussianPairModel& model) {
    return [model](const Vec& x, const Vec& y) { return log_analytic_critic(model, x, y); };
}

double log_marginal(const GaussianPairModel& model, const Vec& y) {
    if (y.size() != model.dim)
        throw std::invalid_argument("log_marginal: dimension mismatch");
    double q = 0.0;
    for (double v : y) q += v * v;
    const double d = static_cast<double>(model.dim);
    return -0.5 * q - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

LogCritic cosine_critic(double inv_temp) {
    if (!(inv_temp > 0.0))
        throw std::invalid_argument("cosine_critic: inv_temp must be > 0");
    return [inv_temp](const Vec& x, const Vec& y) {
        if (x.size() != y.size())
            throw std::invalid_argument("cosine_critic: dimension mismatch");
        double xy = 0.0, xx = 0.0, yy = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            xy += x[c] * y[c];
            xx += x[c] * x[c];
            yy += y[c] * y[c];
        }
        double den = std::sqrt(xx) * std::sqrt(yy);
        if (den <= 1e-300)
            throw std::invalid_argument("cosine_critic: zero-norm input");
        return inv_temp * xy / den;
    };
}

EstimatorReport estimate_infonce(const GaussianPairModel& model, const LogCritic& critic,
                                 std::size_t n, std::size_t batches, Rng& rng) {
    check_batch_args(n, batches);
    Vec per_batch(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        auto [xs, ys] = sample_pairs(model, n, rng);
        per_batch[b] = batch_contrastive(xs, ys, critic, true);
    }
    return make_report(per_batch, n, "infonce");
}

EstimatorReport estimate_infoloob(const GaussianPairModel& model, const LogCritic& critic,
                                  std::size_t n, std::size_t batches, Rng& rng) {
    check_batch_args(n, batches);
    Vec per_batch(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        auto [xs, ys] = sample_pairs(model, n, rng);
        per_batch[b] = batch_contrastive(xs, ys, critic, false);
    }
    return make_report(per_batch, n, "infoloob");
}

EstimatorReport estimate_de(const GaussianPairModel& model, const LogCritic& critic,
                            const std::function<double(const Vec&)>& log_z, std::size_t n,
                            std::size_t batches, Rng& rng) {
    check_batch_args(n, batches);
    Vec per_batch(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        auto [xs, ys] = sample_pairs(model, n, rng);
        per_batch[b] = batch_de(xs, ys, critic, log_z);
    }
    return make_report(per_batch, n, "de");
}

IdentityReport estimate_identity(const GaussianPairModel& model, const LogCritic& critic,
                                 const std::function<double(const Vec&)>& log_z,
                                 std::size_t n, std::size_t batches, Rng& rng) {
    check_batch_args(n, batches);
    Vec loob(batches), de(batches), diff(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        auto [xs, ys] = sample_pairs(model, n, rng);
        loob[b] = batch_contrastive(xs, ys, critic, false);
        de[b] = batch_de(xs, ys, critic, log_z);
        diff[b] = loob[b] - de[b];
    }
    IdentityReport rep;
    rep.infoloob = make_report(loob, n, "infoloob");
    rep.de = make_report(de, n, "de");
    rep.diff_mean = mean_of(diff);
    rep.diff_stderr = stderr_of(diff, rep.diff_mean);
    return rep;
}

std::function<double(const Vec&)> mc_log_z(const GaussianPairModel& model,
                                           const LogCritic& critic, std::size_t pool,
                                           std::uint64_t seed) {
    if (pool < 2) throw std::invalid_argument("mc_log_z: pool must be >= 2");
    Rng rng(seed);
    auto pool_mat = std::make_shared<Mat>(pool, model.dim, 0.0);
    for (std::size_t i = 0; i < pool; ++i)
        for (std::size_t c = 0; c < model.dim; ++c) (*pool_mat)(i, c) = rng.next_normal();
    return [pool_mat, critic](const Vec& y) {
        Vec vals;
        vals.reserve(pool_mat->rows());
        for (std::size_t i = 0; i < pool_mat->rows(); ++i)
            vals.push_back(critic(pool_mat->row(i), y));
        return num::lse(1.0, vals) - std::log(static_cast<double>(vals.size()));
    };
}

double de_hoeffding_bound(double sim_min, double sim_max, double inv_temp) {
    if (!(sim_max >= sim_min))
        throw std::invalid_argument("de_hoeffding_bound: sim_max < sim_min");
    if (!(inv_temp > 0.0))
        throw std::invalid_argument("de_hoeffding_bound: inv_temp must be > 0");
    double range = sim_max - sim_min;
    return inv_temp * inv_temp * range * range / 8.0;
}

}  // namespace cloob::mi
