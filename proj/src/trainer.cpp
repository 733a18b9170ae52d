#include "cloob/trainer.hpp"

#include "cloob/diagnostics.hpp"
#include "cloob/diffgraph.hpp"
#include "cloob/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace cloob::train {

namespace {

Mat random_orthogonal(std::size_t d, Rng& rng) {
    // Gram-Schmidt on a Gaussian matrix; deterministic and well-conditioned
    // with probability 1.
    Mat q(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        Vec v(d);
        for (double& x : v) x = rng.next_normal();
        for (std::size_t j = 0; j < i; ++j) {
            double proj = 0.0;
            for (std::size_t c = 0; c < d; ++c) proj += q(j, c) * v[c];
            for (std::size_t c = 0; c < d; ++c) v[c] -= proj * q(j, c);
        }
        double nrm = num::norm2(v);
        if (nrm < 1e-10) throw std::runtime_error("random_orthogonal: degenerate draw");
        for (std::size_t c = 0; c < d; ++c) q(i, c) = v[c] / nrm;
    }
    return q;  // rows orthonormal; used as the rotation z = Q^T z0 via rows
}

Mat gaussian_matrix(std::size_t r, std::size_t c, double stddev, Rng& rng) {
    Mat m(r, c, 0.0);
    for (double& v : m.raw()) v = stddev * rng.next_normal();
    return m;
}

std::uint32_t label_of(const Vec& z, const Mat& anchors) {
    std::size_t best = 0;
    double best_dot = -1e300;
    for (std::size_t a = 0; a < anchors.rows(); ++a) {
        double d = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) d += anchors(a, c) * z[c];
        if (d > best_dot) {
            best_dot = d;
            best = a;
        }
    }
    return static_cast<std::uint32_t>(best);
}

Dataset generate_impl(const SynthConfig& cfg, const Mat* a_x_in, const Mat* a_y_in) {
    validate(cfg);
    Vec spectrum = latent_spectrum_of(cfg);
    Rng rng(cfg.seed);

    Mat q = random_orthogonal(cfg.d_latent, rng);
    Mat anchors(cfg.n_clusters, cfg.d_latent, 0.0);
    for (std::size_t a = 0; a < cfg.n_clusters; ++a) {
        Vec v(cfg.d_latent);
        for (double& x : v) x = rng.next_normal();
        double nrm = num::norm2(v);
        if (nrm < 1e-10) throw std::runtime_error("generate_dataset: degenerate anchor");
        for (std::size_t c = 0; c < cfg.d_latent; ++c) anchors(a, c) = v[c] / nrm;
    }
    double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.d_latent));
    Mat a_x = a_x_in ? *a_x_in : gaussian_matrix(cfg.d_x_raw, cfg.d_latent, stddev, rng);
    Mat a_y = a_y_in ? *a_y_in : gaussian_matrix(cfg.d_y_raw, cfg.d_latent, stddev, rng);
    if (a_x.rows() != cfg.d_x_raw || a_x.cols() != cfg.d_latent ||
        a_y.rows() != cfg.d_y_raw || a_y.cols() != cfg.d_latent)
        throw std::invalid_argument("generate_dataset: mixing matrix shape mismatch");

    auto fill_split = [&](std::size_t n, Mat& xs, Mat& ys, std::vector<std::uint32_t>& labels) {
        xs = Mat(n, cfg.d_x_raw, 0.0);
        ys = Mat(n, cfg.d_y_raw, 0.0);
        labels.resize(n);
        Vec z0(cfg.d_latent), z(cfg.d_latent);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < cfg.d_latent; ++c)
                z0[c] = std::sqrt(spectrum[c]) * rng.next_normal();
            // rotate by the orthogonal matrix with rows of q as the new basis
            for (std::size_t c = 0; c < cfg.d_latent; ++c) {
                double s = 0.0;
                for (std::size_t k = 0; k < cfg.d_latent; ++k) s += q(k, c) * z0[k];
                z[c] = s;
            }
            for (std::size_t r = 0; r < cfg.d_x_raw; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < cfg.d_latent; ++c) s += a_x(r, c) * z[c];
                xs(i, r) = s + cfg.noise_sigma * rng.next_normal();
            }
            for (std::size_t r = 0; r < cfg.d_y_raw; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < cfg.d_latent; ++c) s += a_y(r, c) * z[c];
                ys(i, r) = s + cfg.noise_sigma * rng.next_normal();
            }
            labels[i] = label_of(z, anchors);
        }
    };

    Dataset ds;
    fill_split(cfg.n_train, ds.x_train, ds.y_train, ds.labels_train);
    fill_split(cfg.n_test, ds.x_test, ds.y_test, ds.labels_test);
    return ds;
}

}  // namespace

void validate(const SynthConfig& cfg) {
    if (cfg.d_latent == 0 || cfg.d_x_raw == 0 || cfg.d_y_raw == 0)
        throw std::invalid_argument("SynthConfig: dimensions must be >= 1");
    if (cfg.d_latent > std::min(cfg.d_x_raw, cfg.d_y_raw))
        throw std::invalid_argument("SynthConfig: d_latent must be <= min raw dims");
    if (!(cfg.noise_sigma >= 0.0))
        throw std::invalid_argument("SynthConfig: noise_sigma must be >= 0");
    if (cfg.n_clusters < 2)
        throw std::invalid_argument("SynthConfig: n_clusters must be >= 2");
    if (cfg.n_train == 0 || cfg.n_test == 0)
        throw std::invalid_argument("SynthConfig: split sizes must be >= 1");
    if (!cfg.latent_spectrum.empty()) {
        if (cfg.latent_spectrum.size() != cfg.d_latent)
            throw std::invalid_argument("SynthConfig: latent_spectrum size != d_latent");
        for (std::size_t i = 0; i < cfg.latent_spectrum.size(); ++i) {
            if (!(cfg.latent_spectrum[i] > 0.0))
                throw std::invalid_argument("SynthConfig: latent_spectrum must be positive");
            if (i > 0 && cfg.latent_spectrum[i] > cfg.latent_spectrum[i - 1])
                throw std::invalid_argument("SynthConfig: latent_spectrum must be descending");
        }
    }
}

void validate(const TrainConfig& cfg) {
    if (!(cfg.beta >= 0.0)) throw std::invalid_argument("TrainConfig: beta must be >= 0");
    if (!(cfg.inv_temp > 0.0))
        throw std::invalid_argument("TrainConfig: inv_temp must be > 0");
    if (!(cfg.lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
    if (!(cfg.weight_decay >= 0.0))
        throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (cfg.batch_size < 2)
        throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
    if (cfg.cycle_epochs == 0)
        throw std::invalid_argument("TrainConfig: cycle_epochs must be >= 1");
    if (cfg.d_e == 0) throw std::invalid_argument("TrainConfig: d_e must be >= 1");
}

Vec latent_spectrum_of(const SynthConfig& cfg) {
    if (!cfg.latent_spectrum.empty()) return cfg.latent_spectrum;
    Vec s(cfg.d_latent);
    double v = 1.0;
    for (std::size_t i = 0; i < cfg.d_latent; ++i, v *= 0.8) s[i] = v;
    return s;
}

Dataset generate_dataset(const SynthConfig& cfg) {
    return generate_impl(cfg, nullptr, nullptr);
}

Dataset generate_dataset_with(const SynthConfig& cfg, const Mat& a_x, const Mat& a_y) {
    return generate_impl(cfg, &a_x, &a_y);
}

EncoderParams init_params(const TrainConfig& cfg, std::size_t d_x_raw, std::size_t d_y_raw,
                          Rng& rng) {
    validate(cfg);
    EncoderParams p;
    p.d_e = cfg.d_e;
    auto make = [&](std::size_t d_raw) {
        std::vector<Mat> ws;
        if (cfg.hidden > 0) {
            ws.push_back(gaussian_matrix(d_raw, cfg.hidden,
                                         1.0 / std::sqrt(static_cast<double>(d_raw)), rng));
            ws.push_back(gaussian_matrix(cfg.hidden, cfg.d_e,
                                         1.0 / std::sqrt(static_cast<double>(cfg.hidden)),
                                         rng));
        } else {
            ws.push_back(gaussian_matrix(d_raw, cfg.d_e,
                                         1.0 / std::sqrt(static_cast<double>(d_raw)), rng));
        }
        return ws;
    };
    p.x_weights = make(d_x_raw);
    p.y_weights = make(d_y_raw);
    return p;
}

Mat forward_embed(const std::vector<Mat>& weights, const Mat& raw) {
    if (weights.empty() || weights.size() > 2)
        throw std::invalid_argument("forward_embed: expected 1 or 2 weight matrices");
    Mat cur = num::matmul(raw, weights[0]);
    if (weights.size() == 2) {
        for (double& v : cur.raw()) v = std::tanh(v);
        cur = num::matmul(cur, weights[1]);
    }
    return num::l2_normalize_rows(cur);
}

double batch_loss_and_grads(const EncoderParams& params, const Mat& x_raw, const Mat& y_raw,
                            const TrainConfig& cfg, std::vector<Mat>* grads) {
    if (x_raw.rows() != y_raw.rows())
        throw std::invalid_argument("batch_loss_and_grads: batch size mismatch");
    if (x_raw.rows() < 2)
        throw std::invalid_argument("batch_loss_and_grads: need a batch of >= 2");

    graph::Tape tape;
    std::vector<int> weight_ids;
    auto encode = [&](const Mat& raw, const std::vector<Mat>& ws) {
        int cur = tape.leaf(raw);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            int w = tape.leaf(ws[i]);
            weight_ids.push_back(w);
            cur = tape.matmul(cur, w);
            if (ws.size() == 2 && i == 0) cur = tape.tanh(cur);
        }
        return tape.l2_normalize_rows(cur);
    };
    int ex = encode(x_raw, params.x_weights);
    int ey = encode(y_raw, params.y_weights);

    int first, second;
    if (cfg.hopfield) {
        int ex_t = tape.transpose(ex);
        int ey_t = tape.transpose(ey);
        auto retrieve = [&](int query, int mem, int mem_t) {
            int att = tape.row_softmax(tape.matmul(query, mem_t), cfg.beta);
            return tape.l2_normalize_rows(tape.matmul(att, mem));
        };
        int u_x = retrieve(ex, ex, ex_t);
        int u_y = retrieve(ey, ex, ex_t);
        int v_x = retrieve(ex, ey, ey_t);
        int v_y = retrieve(ey, ey, ey_t);
        first = tape.matmul(u_x, tape.transpose(u_y));
        second = tape.transpose(tape.matmul(v_x, tape.transpose(v_y)));
    } else {
        int sims = tape.matmul(ex, tape.transpose(ey));
        first = sims;
        second = tape.transpose(sims);
    }
    bool exclude = cfg.loss_kind == LossKind::infoloob;
    int loss = tape.add(tape.neg_log_ratio_loss(first, cfg.inv_temp, exclude),
                        tape.neg_log_ratio_loss(second, cfg.inv_temp, exclude));
    if (cfg.loss_kind == LossKind::infoloob) loss = tape.scale(loss, 1.0 / cfg.inv_temp);

    double value = tape.value(loss)(0, 0);
    if (grads) {
        tape.backward(loss);
        grads->clear();
        for (int id : weight_ids) grads->push_back(tape.grad(id));
    }
    return value;
}

void adamw_step(Mat& w, const Mat& g, AdamState& state, double lr, double weight_decay,
                double b1, double b2, double eps) {
    if (!w.same_shape(g))
        throw std::invalid_argument("adamw_step: gradient shape mismatch " + w.shape_str() +
                                    " vs " + g.shape_str());
    if (state.t == 0) {
        state.m = Mat(w.rows(), w.cols(), 0.0);
        state.v = Mat(w.rows(), w.cols(), 0.0);
    }
    ++state.t;
    double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < w.size(); ++i) {
        double gv = g.raw()[i];
        double& m = state.m.raw()[i];
        double& v = state.v.raw()[i];
        m = b1 * m + (1.0 - b1) * gv;
        v = b2 * v + (1.0 - b2) * gv * gv;
        double mhat = m / c1;
        double vhat = v / c2;
        w.raw()[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w.raw()[i]);
    }
}

double cosine_restart_lr(std::size_t step, std::size_t warmup_steps, std::size_t cycle_steps,
                         double base_lr) {
    if (cycle_steps == 0)
        throw std::invalid_argument("cosine_restart_lr: cycle_steps must be >= 1");
    if (step < warmup_steps)
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    std::size_t t = (step - warmup_steps) % cycle_steps;
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) /
                           static_cast<double>(cycle_steps)));
}

RetrievalScores evaluate_retrieval(const EmbeddingBatch& x_emb, const EmbeddingBatch& y_emb,
                                   const std::vector<std::size_t>& ks) {
    const std::size_t n = x_emb.n();
    if (y_emb.n() != n)
        throw std::invalid_argument("evaluate_retrieval: batch size mismatch");
    for (std::size_t k : ks)
        if (k < 1 || k > n)
            throw std::invalid_argument("evaluate_retrieval: k out of range [1, N]");

    // rank of the true partner for anchor i, candidates as rows of `cands`
    auto ranks = [&](const Mat& anchors, const Mat& cands) {
        std::vector<std::size_t> rk(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec sims(n);
            for (std::size_t j = 0; j < n; ++j)
                sims[j] = num::dot(anchors.row(i), cands.row(j));
            std::size_t ahead = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                if (sims[j] > sims[i] || (sims[j] == sims[i] && j < i)) ++ahead;
            }
            rk[i] = ahead + 1;
        }
        return rk;
    };
    auto i2t = ranks(x_emb.rows(), y_emb.rows());
    auto t2i = ranks(y_emb.rows(), x_emb.rows());

    RetrievalScores out;
    out.ks = ks;
    for (std::size_t k : ks) {
        std::size_t hi = 0, ht = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i2t[i] <= k) ++hi;
            if (t2i[i] <= k) ++ht;
        }
        out.r_i2t.push_back(static_cast<double>(hi) / static_cast<double>(n));
        out.r_t2i.push_back(static_cast<double>(ht) / static_cast<double>(n));
    }
    return out;
}

namespace {

std::string config_hash(const TrainConfig& cfg) {
    std::ostringstream os;
    os << static_cast<int>(cfg.loss_kind) << '|' << cfg.hopfield << '|' << cfg.beta << '|'
       << cfg.inv_temp << '|' << cfg.lr << '|' << cfg.weight_decay << '|' << cfg.batch_size
       << '|' << cfg.epochs << '|' << cfg.warmup_steps << '|' << cfg.cycle_epochs << '|'
       << cfg.hidden << '|' << cfg.d_e << '|' << cfg.seed;
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EpochMetrics eval_epoch(const EncoderParams& params, const Dataset& data) {
    EpochMetrics m;
    Mat ex = forward_embed(params.x_weights, data.x_test);
    Mat ey = forward_embed(params.y_weights, data.y_test);
    EmbeddingBatch bx(ex), by(ey);
    std::size_t n = bx.n();
    std::vector<std::size_t> ks{1, std::min<std::size_t>(5, n)};
    RetrievalScores rs = evaluate_retrieval(bx, by, ks);
    m.r1_i2t = rs.r_i2t[0];
    m.r5_i2t = rs.r_i2t[1];
    m.r1_t2i = rs.r_t2i[0];
    m.r5_t2i = rs.r_t2i[1];
    m.effeig_x = diag::effective_eigenvalue_count(bx);
    m.effeig_y = diag::effective_eigenvalue_count(by);
    m.ajne_x = diag::ajne_statistic(bx);
    m.ajne_y = diag::ajne_statistic(by);
    return m;
}

}  // namespace

std::pair<EncoderParams, RunMetrics> train(const TrainConfig& cfg, const Dataset& data) {
    validate(cfg);
    if (data.x_train.rows() != data.y_train.rows() ||
        data.x_test.rows() != data.y_test.rows())
        throw std::invalid_argument("train: paired splits differ in size");
    const std::size_t n_train = data.x_train.rows();
    const std::size_t batches = n_train / cfg.batch_size;
    if (batches == 0)
        throw std::invalid_argument("train: n_train smaller than one batch");

    Rng init_rng(cfg.seed);
    EncoderParams params = init_params(cfg, data.x_train.cols(), data.y_train.cols(),
                                       init_rng);
    Rng shuffle_rng(cfg.seed ^ 0x5bf0f1e2d3c4b5a6ULL);

    std::vector<Mat*> weights;
    for (Mat& w : params.x_weights) weights.push_back(&w);
    for (Mat& w : params.y_weights) weights.push_back(&w);
    std::vector<AdamState> opt(weights.size());

    const std::size_t cycle_steps = cfg.cycle_epochs * batches;
    std::size_t step = 0;

    RunMetrics metrics;
    metrics.reference_epoch = cfg.cycle_epochs;
    metrics.config_hash = config_hash(cfg);

    std::vector<std::size_t> order(n_train);
    std::vector<Mat> grads;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
        for (std::size_t i = n_train - 1; i > 0; --i) {
            std::size_t j = shuffle_rng.next_below(static_cast<std::uint32_t>(i + 1));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        double first_lr = cosine_restart_lr(step, cfg.warmup_steps, cycle_steps, cfg.lr);
        for (std::size_t b = 0; b < batches; ++b) {
            Mat xb(cfg.batch_size, data.x_train.cols(), 0.0);
            Mat yb(cfg.batch_size, data.y_train.cols(), 0.0);
            for (std::size_t r = 0; r < cfg.batch_size; ++r) {
                std::size_t src = order[b * cfg.batch_size + r];
                xb.set_row(r, data.x_train.row(src));
                yb.set_row(r, data.y_train.row(src));
            }

            double loss = batch_loss_and_grads(params, xb, yb, cfg, &grads);
            if (!std::isfinite(loss))
                throw DivergenceError("train: non-finite loss at step " +
                                      std::to_string(step));
            epoch_loss += loss;

            double lr = cosine_restart_lr(step, cfg.warmup_steps, cycle_steps, cfg.lr);
            for (std::size_t w = 0; w < weights.size(); ++w)
                adamw_step(*weights[w], grads[w], opt[w], lr, cfg.weight_decay);
            ++step;
        }

        EpochMetrics em = eval_epoch(params, data);
        em.epoch = epoch;
        em.lr = first_lr;
        em.train_loss = epoch_loss / static_cast<double>(batches);
        metrics.epochs.push_back(em);
    }
    return {std::move(params), std::move(metrics)};
}

AblationTable run_ablation(const SynthConfig& synth, const TrainConfig& base,
                           const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
    AblationTable table;
    const std::pair<LossKind, bool> cells[4] = {{LossKind::infonce, false},
                                                {LossKind::infonce, true},
                                                {LossKind::infoloob, false},
                                                {LossKind::infoloob, true}};
    for (std::uint64_t seed : seeds) {
        SynthConfig s = synth;
        s.seed = seed;
        Dataset data = generate_dataset(s);
        AblationRow row;
        row.seed = seed;
        for (const auto& [kind, hop] : cells) {
            TrainConfig c = base;
            c.seed = seed;
            c.loss_kind = kind;
            c.hopfield = hop;
            auto [params, metrics] = train(c, data);
            AblationCell cell;
            cell.loss_kind = kind;
            cell.hopfield = hop;
            cell.metrics = std::move(metrics);
            EpochMetrics fin = eval_epoch(params, data);
            cell.final_r1 = fin.r1_i2t;
            cell.final_effeig_x = fin.effeig_x;
            cell.final_effeig_y = fin.effeig_y;
            cell.final_ajne_x = fin.ajne_x;
            cell.final_ajne_y = fin.ajne_y;
            row.cells.push_back(std::move(cell));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace cloob::train
