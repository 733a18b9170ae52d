#pragma once

#include "cloob/mat.hpp"
#include "cloob/rng.hpp"

#include <functional>
#include <string>
#include <utility>

namespace cloob::mi {

/// Jointly Gaussian pair model with per-dimension correlation rho:
/// X ~ N(0, I), Y = rho X + sqrt(1 - rho^2) eps. Standard marginals,
/// conditional p(y|x) = N(rho x, (1 - rho^2) I), closed-form MI.
struct GaussianPairModel {
    std::size_t dim;
    double rho;

    GaussianPairModel(std::size_t dim, double rho);
};

struct EstimatorReport {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_batches = 0;
    std::size_t batch_size = 0;
    std::string variant;
};

/// Log-domain critic: returns ln f(x, y). All estimator arithmetic stays
/// in the log domain.
using LogCritic = std::function<double(const Vec&, const Vec&)>;

/// Draws n pairs; Y = rho X + sqrt(1-rho^2) eps per dimension, X and eps
/// standard normal from the seeded stream. Rows are samples.
std::pair<Mat, Mat> sample_pairs(const GaussianPairModel& model, std::size_t n, Rng& rng);

/// True MI = -(d/2) ln(1 - rho^2).
double true_mi(const GaussianPairModel& model);

/// ln p(y|x) for the model: the optimal critic of the bound theorems.
double log_analytic_critic(const GaussianPairModel& model, const Vec& x, const Vec& y);
LogCritic analytic_critic(const GaussianPairModel& model);

/// ln p(y), the analytic partition value Z(y) of the analytic critic.
double log_marginal(const GaussianPairModel& model, const Vec& y);

/// Cosine-similarity critic ln f = tau^-1 cos(x, y); bounded, for the
/// Hoeffding-bound checks.
LogCritic cosine_critic(double inv_temp);

/// Pair-form InfoNCE estimator (1/N inside the denominator), mean and
/// stderr over `batches` independent batches.
EstimatorReport estimate_infonce(const GaussianPairModel& model, const LogCritic& critic,
                                 std::size_t n, std::size_t batches, Rng& rng);

/// Leave-one-out denominator variant.
EstimatorReport estimate_infoloob(const GaussianPairModel& model, const LogCritic& critic,
                                  std::size_t n, std::size_t batches, Rng& rng);

/// DE = E[ln(Z(y) / ((1/(N-1)) sum_j f(x_j, y)))]. `log_z` supplies
/// ln Z(y); for the analytic critic that is ln p(y).
EstimatorReport estimate_de(const GaussianPairModel& model, const LogCritic& critic,
                            const std::function<double(const Vec&)>& log_z, std::size_t n,
                            std::size_t batches, Rng& rng);

/// Per-batch paired InfoLOOB and DE streams (same batches), so that the
/// MI identity InfoLOOB - DE = MI (KL = 0, analytic critic) can be
/// checked with the stderr of the difference.
struct IdentityReport {
    EstimatorReport infoloob;
    EstimatorReport de;
    double diff_mean = 0.0;    // mean of (loob_b - de_b)
    double diff_stderr = 0.0;  // stderr of the difference stream
};
IdentityReport estimate_identity(const GaussianPairModel& model, const LogCritic& critic,
                                 const std::function<double(const Vec&)>& log_z,
                                 std::size_t n, std::size_t batches, Rng& rng);

/// Monte-Carlo ln Z(y) for an arbitrary critic, from `pool` fresh draws
/// of x ~ p(x). Used by the cosine-critic DE mode.
std::function<double(const Vec&)> mc_log_z(const GaussianPairModel& model,
                                           const LogCritic& critic, std::size_t pool,
                                           std::uint64_t seed);

/// Hoeffding-lemma bound tau^-2 (sim_max - sim_min)^2 / 8 on DE for
/// bounded similarities.
double de_hoeffding_bound(double sim_min, double sim_max, double inv_temp);

}  // namespace cloob::mi
