#pragma once

#include "cloob/mat.hpp"
#include "cloob/objectives_types.hpp"
#include "cloob/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

namespace cloob::train {

struct SynthConfig {
    std::size_t d_latent = 16;
    std::size_t d_x_raw = 96;
    std::size_t d_y_raw = 80;
    std::size_t n_train = 2048;
    std::size_t n_test = 256;
    double noise_sigma = 0.1;
    std::size_t n_clusters = 8;
    Vec latent_spectrum;  // empty = geometric, 1.0 ratio 0.8, d_latent entries
    std::uint64_t seed = 1;
};

struct Dataset {
    Mat x_train;
    Mat y_train;
    Mat x_test;
    Mat y_test;
    std::vector<std::uint32_t> labels_train;
    std::vector<std::uint32_t> labels_test;
};

enum class LossKind { infonce, infoloob };

struct TrainConfig {
    LossKind loss_kind = LossKind::infoloob;
    bool hopfield = true;
    double beta = 8.0;
    double inv_temp = 30.0;
    double lr = 1e-3;
    double weight_decay = 0.1;
    std::size_t batch_size = 64;
    std::size_t epochs = 35;
    std::size_t warmup_steps = 200;
    std::size_t cycle_epochs = 7;
    std::size_t hidden = 64;  // 0 = linear encoders
    std::size_t d_e = 32;
    std::uint64_t seed = 1;
};

/// Dual encoders: per modality an optional hidden layer (tanh) and a
/// projection to d_e; outputs are always L2-row-normalized downstream.
struct EncoderParams {
    std::vector<Mat> x_weights;  // [d_raw x hidden, hidden x d_e] or [d_raw x d_e]
    std::vector<Mat> y_weights;
    std::size_t d_e = 0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double r1_i2t = 0.0;
    double r5_i2t = 0.0;
    double r1_t2i = 0.0;
    double r5_t2i = 0.0;
    std::size_t effeig_x = 0;
    std::size_t effeig_y = 0;
    double ajne_x = 0.0;
    double ajne_y = 0.0;
};

struct RunMetrics {
    std::vector<EpochMetrics> epochs;
    std::size_t reference_epoch = 0;  // last epoch of the first cosine cycle
    std::string config_hash;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void validate(const SynthConfig& cfg);
void validate(const TrainConfig& cfg);

/// Effective spectrum: cfg.latent_spectrum if set, else the geometric
/// default. Always d_latent entries, positive descending.
Vec latent_spectrum_of(const SynthConfig& cfg);

/// Shared-latent paired data: z ~ N(0, diag(spectrum)) rotated by a seeded
/// orthogonal matrix; x = A_x z + sigma eps_x, y = A_y z + sigma eps_y;
/// cluster label = argmax_c z . anchor_c over seeded unit anchors.
Dataset generate_dataset(const SynthConfig& cfg);

/// Same generator with the mixing matrices supplied instead of drawn;
/// everything else (rotation, anchors, latents, noise) keeps the seeded
/// stream order.
Dataset generate_dataset_with(const SynthConfig& cfg, const Mat& a_x, const Mat& a_y);

EncoderParams init_params(const TrainConfig& cfg, std::size_t d_x_raw, std::size_t d_y_raw,
                          Rng& rng);

/// Encoder forward for one modality; rows of `raw` in, unit-norm embedding
/// rows out.
Mat forward_embed(const std::vector<Mat>& weights, const Mat& raw);

/// Loss of one minibatch under the configured cell (loss kind x hopfield),
/// with gradients for every weight (x weights then y weights) if `grads`
/// is non-null. Built on the tape so gradients flow through retrieval and
/// renormalization.
double batch_loss_and_grads(const EncoderParams& params, const Mat& x_raw, const Mat& y_raw,
                            const TrainConfig& cfg, std::vector<Mat>* grads);

/// Decoupled-weight-decay Adam. `state.t` counts completed steps and is
/// incremented by the call.
struct AdamState {
    Mat m;
    Mat v;
    std::size_t t = 0;
};
void adamw_step(Mat& w, const Mat& g, AdamState& state, double lr, double weight_decay,
                double b1 = 0.9, double b2 = 0.999, double eps = 1e-8);

/// Linear warmup to base_lr over warmup_steps, then hard-restart cosine:
/// lr = base 0.5 (1 + cos(pi t / cycle_steps)), t reset each cycle.
double cosine_restart_lr(std::size_t step, std::size_t warmup_steps, std::size_t cycle_steps,
                         double base_lr);

struct RetrievalScores {
    std::vector<std::size_t> ks;
    Vec r_i2t;  // x-anchor direction, same order as ks
    Vec r_t2i;
};
RetrievalScores evaluate_retrieval(const EmbeddingBatch& x_emb, const EmbeddingBatch& y_emb,
                                   const std::vector<std::size_t>& ks);

std::pair<EncoderParams, RunMetrics> train(const TrainConfig& cfg, const Dataset& data);

struct AblationCell {
    LossKind loss_kind = LossKind::infonce;
    bool hopfield = false;
    RunMetrics metrics;
    double final_r1 = 0.0;
    std::size_t final_effeig_x = 0;
    std::size_t final_effeig_y = 0;
    double final_ajne_x = 0.0;
    double final_ajne_y = 0.0;
};

struct AblationRow {
    std::uint64_t seed = 0;
    std::vector<AblationCell> cells;  // nce/off, nce/on, loob/off, loob/on
};

struct AblationTable {
    std::vector<AblationRow> rows;
};

/// Runs the 2x2 grid {infonce, infoloob} x {hopfield off, on} for each
/// seed, with data and initialization shared across the four cells.
AblationTable run_ablation(const SynthConfig& synth, const TrainConfig& base,
                           const std::vector<std::uint64_t>& seeds);

}  // namespace cloob::train
