#include "cloob/diagnostics.hpp"
#include "cloob/hopfield.hpp"
#include "cloob/io.hpp"
#include "cloob/miestimators.hpp"
#include "cloob/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cloob;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string plots = "off";
    int threads = 1;
};

std::string created_at() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return json::object();
    std::ifstream is(opts.config_path);
    if (!is) throw io::IoError("cannot open config: " + opts.config_path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config parse error: " + std::string(e.what()));
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    return j;
}

// precedence: config < CLOOBLAB_SEED env < explicit --seed
std::uint64_t effective_seed(const json& cfg, const CommonOpts& opts) {
    std::uint64_t seed = cfg.value("seed", 1ULL);
    if (const char* env = std::getenv("CLOOBLAB_SEED")) seed = std::stoull(env);
    if (opts.seed) seed = *opts.seed;
    return seed;
}

train::SynthConfig parse_synth(const json& cfg, std::uint64_t seed) {
    train::SynthConfig s;
    s.d_latent = cfg.value("d_latent", s.d_latent);
    s.d_x_raw = cfg.value("d_x_raw", s.d_x_raw);
    s.d_y_raw = cfg.value("d_y_raw", s.d_y_raw);
    s.n_train = cfg.value("n_train", s.n_train);
    s.n_test = cfg.value("n_test", s.n_test);
    s.noise_sigma = cfg.value("noise_sigma", s.noise_sigma);
    s.n_clusters = cfg.value("n_clusters", s.n_clusters);
    if (cfg.contains("latent_spectrum"))
        s.latent_spectrum = cfg.at("latent_spectrum").get<Vec>();
    s.seed = seed;
    train::validate(s);
    return s;
}

train::TrainConfig parse_train(const json& cfg, std::uint64_t seed) {
    train::TrainConfig t;
    std::string kind = cfg.value("loss_kind", std::string("infoloob"));
    if (kind == "infonce")
        t.loss_kind = train::LossKind::infonce;
    else if (kind == "infoloob")
        t.loss_kind = train::LossKind::infoloob;
    else
        throw std::invalid_argument("loss_kind must be infonce or infoloob");
    if (cfg.contains("hopfield")) {
        const json& h = cfg.at("hopfield");
        if (h.is_boolean())
            t.hopfield = h.get<bool>();
        else if (h == "on")
            t.hopfield = true;
        else if (h == "off")
            t.hopfield = false;
        else
            throw std::invalid_argument("hopfield must be on, off or boolean");
    }
    t.beta = cfg.value("beta", t.beta);
    t.inv_temp = cfg.value("inv_temp", t.inv_temp);
    t.lr = cfg.value("lr", t.lr);
    t.weight_decay = cfg.value("weight_decay", t.weight_decay);
    t.batch_size = cfg.value("batch_size", t.batch_size);
    t.epochs = cfg.value("epochs", t.epochs);
    t.warmup_steps = cfg.value("warmup_steps", t.warmup_steps);
    t.cycle_epochs = cfg.value("cycle_epochs", t.cycle_epochs);
    t.hidden = cfg.value("hidden", t.hidden);
    t.d_e = cfg.value("d_e", t.d_e);
    t.seed = seed;
    train::validate(t);
    return t;
}

json echo_synth(const train::SynthConfig& s) {
    return json{{"d_latent", s.d_latent},
                {"d_x_raw", s.d_x_raw},
                {"d_y_raw", s.d_y_raw},
                {"n_train", s.n_train},
                {"n_test", s.n_test},
                {"noise_sigma", s.noise_sigma},
                {"n_clusters", s.n_clusters},
                {"latent_spectrum", train::latent_spectrum_of(s)},
                {"seed", s.seed}};
}

json echo_train(const train::TrainConfig& t) {
    return json{{"loss_kind",
                 t.loss_kind == train::LossKind::infonce ? "infonce" : "infoloob"},
                {"hopfield", t.hopfield},
                {"beta", t.beta},
                {"inv_temp", t.inv_temp},
                {"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"warmup_steps", t.warmup_steps},
                {"cycle_epochs", t.cycle_epochs},
                {"hidden", t.hidden},
                {"d_e", t.d_e},
                {"seed", t.seed}};
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw io::IoError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
    if (!os) throw io::IoError("write failed: " + path);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io::IoError("cannot create output directory: " + dir);
}

void plot_metrics(const std::string& out_dir, const train::RunMetrics& metrics) {
    if (metrics.epochs.empty()) return;
    Vec xs, loss, r1i, r1t;
    for (const auto& e : metrics.epochs) {
        xs.push_back(static_cast<double>(e.epoch));
        loss.push_back(e.train_loss);
        r1i.push_back(e.r1_i2t);
        r1t.push_back(e.r1_t2i);
    }
    io::write_line_plot_svg(out_dir + "/loss.svg", "train loss", {{"train_loss", xs, loss}});
    io::write_line_plot_svg(out_dir + "/retrieval.svg", "test R@1",
                            {{"r1_i2t", xs, r1i}, {"r1_t2i", xs, r1t}});
}

int cmd_gen(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::uint64_t seed = effective_seed(cfg, opts);
    train::SynthConfig s = parse_synth(cfg, seed);
    ensure_out_dir(opts.out_dir);
    train::Dataset ds = train::generate_dataset(s);
    io::write_dataset_split(opts.out_dir + "/train.pds", ds.x_train, ds.y_train,
                            ds.labels_train, static_cast<std::uint32_t>(s.n_clusters));
    io::write_dataset_split(opts.out_dir + "/test.pds", ds.x_test, ds.y_test,
                            ds.labels_test, static_cast<std::uint32_t>(s.n_clusters));
    write_json(opts.out_dir + "/gen_report.json",
               json{{"created_at", created_at()},
                    {"config", echo_synth(s)},
                    {"train_file", "train.pds"},
                    {"test_file", "test.pds"}});
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::uint64_t seed = effective_seed(cfg, opts);
    train::SynthConfig s = parse_synth(cfg, seed);
    train::TrainConfig t = parse_train(cfg, seed);
    ensure_out_dir(opts.out_dir);
    train::Dataset ds = train::generate_dataset(s);
    auto [params, metrics] = train::train(t, ds);
    io::write_metrics_csv(opts.out_dir + "/metrics.csv", metrics);
    json rep{{"created_at", created_at()},
             {"synth", echo_synth(s)},
             {"train", echo_train(t)},
             {"config_hash", metrics.config_hash},
             {"reference_epoch", metrics.reference_epoch},
             {"epochs_run", metrics.epochs.size()}};
    if (!metrics.epochs.empty()) {
        const auto& fin = metrics.epochs.back();
        rep["final"] = json{{"train_loss", fin.train_loss}, {"r1_i2t", fin.r1_i2t},
                            {"r5_i2t", fin.r5_i2t},         {"r1_t2i", fin.r1_t2i},
                            {"r5_t2i", fin.r5_t2i},         {"effeig_x", fin.effeig_x},
                            {"effeig_y", fin.effeig_y},     {"ajne_x", fin.ajne_x},
                            {"ajne_y", fin.ajne_y}};
    }
    write_json(opts.out_dir + "/report.json", rep);
    if (opts.plots == "on") plot_metrics(opts.out_dir, metrics);
    return 0;
}

int cmd_ablate(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::uint64_t seed = effective_seed(cfg, opts);
    train::SynthConfig s = parse_synth(cfg, seed);
    train::TrainConfig t = parse_train(cfg, seed);
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    if (cfg.contains("seeds")) seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    ensure_out_dir(opts.out_dir);

    train::AblationTable table = train::run_ablation(s, t, seeds);
    json rows = json::array();
    std::vector<double> mean_r1(4, 0.0);
    for (const auto& row : table.rows) {
        json cells = json::array();
        for (std::size_t c = 0; c < row.cells.size(); ++c) {
            const auto& cell = row.cells[c];
            mean_r1[c] += cell.final_r1;
            cells.push_back(json{
                {"loss_kind",
                 cell.loss_kind == train::LossKind::infonce ? "infonce" : "infoloob"},
                {"hopfield", cell.hopfield},
                {"final_r1", cell.final_r1},
                {"final_effeig_x", cell.final_effeig_x},
                {"final_effeig_y", cell.final_effeig_y},
                {"final_ajne_x", cell.final_ajne_x},
                {"final_ajne_y", cell.final_ajne_y}});
        }
        rows.push_back(json{{"seed", row.seed}, {"cells", cells}});
    }
    for (double& m : mean_r1) m /= static_cast<double>(table.rows.size());
    write_json(opts.out_dir + "/ablation.json",
               json{{"created_at", created_at()},
                    {"synth", echo_synth(s)},
                    {"train", echo_train(t)},
                    {"seeds", seeds},
                    {"rows", rows},
                    {"mean_final_r1",
                     json{{"infonce_off", mean_r1[0]},
                          {"infonce_on", mean_r1[1]},
                          {"infoloob_off", mean_r1[2]},
                          {"infoloob_on", mean_r1[3]}}}});
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::string xp = cfg.value("x_embeddings", std::string());
    std::string yp = cfg.value("y_embeddings", std::string());
    if (xp.empty() || yp.empty())
        throw std::invalid_argument("eval needs x_embeddings and y_embeddings paths");
    std::vector<std::size_t> ks{1, 5};
    if (cfg.contains("ks")) ks = cfg.at("ks").get<std::vector<std::size_t>>();
    ensure_out_dir(opts.out_dir);
    EmbeddingBatch x(num::l2_normalize_rows(io::read_embeddings(xp)));
    EmbeddingBatch y(num::l2_normalize_rows(io::read_embeddings(yp)));
    train::RetrievalScores rs = train::evaluate_retrieval(x, y, ks);
    json recalls = json::array();
    for (std::size_t i = 0; i < ks.size(); ++i)
        recalls.push_back(
            json{{"k", ks[i]}, {"r_i2t", rs.r_i2t[i]}, {"r_t2i", rs.r_t2i[i]}});
    write_json(opts.out_dir + "/eval.json", json{{"created_at", created_at()},
                                                 {"x_embeddings", xp},
                                                 {"y_embeddings", yp},
                                                 {"recalls", recalls}});
    return 0;
}

int cmd_diagnose(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::string xp = cfg.value("embeddings", std::string());
    if (xp.empty()) throw std::invalid_argument("diagnose needs an embeddings path");
    std::string yp = cfg.value("y_embeddings", std::string());
    double beta = cfg.value("beta", 8.0);
    std::size_t k = cfg.value("top_k", 10ULL);
    ensure_out_dir(opts.out_dir);

    EmbeddingBatch x(num::l2_normalize_rows(io::read_embeddings(xp)));
    json rep{{"created_at", created_at()},
             {"embeddings", xp},
             {"effective_eig_count", diag::effective_eigenvalue_count(x)},
             {"ajne", diag::ajne_statistic(x)}};
    if (!yp.empty()) {
        EmbeddingBatch y(num::l2_normalize_rows(io::read_embeddings(yp)));
        k = std::min(k, x.n() - 1);
        auto hist = diag::similarity_histograms(x, y, k);
        auto mem_u = hopfield::HopfieldMemory::from_batch(x, beta);
        auto mem_v = hopfield::HopfieldMemory::from_batch(y, beta);
        auto dv = diag::dot_variance_report(x, y, mem_u, mem_v);
        rep["y_embeddings"] = yp;
        rep["effective_eig_count_y"] = diag::effective_eigenvalue_count(y);
        rep["ajne_y"] = diag::ajne_statistic(y);
        rep["matched_sims"] = hist.matched;
        rep["topk_unmatched_sims"] = hist.topk;
        rep["dot_variances"] =
            json{{"var_uxuy", dv.var_uxuy}, {"var_vxvy", dv.var_vxvy},
                 {"var_uxvy", dv.var_uxvy}};
    }
    write_json(opts.out_dir + "/diagnostics.json", rep);
    return 0;
}

int cmd_mibench(const CommonOpts& opts) {
    json cfg = load_config(opts);
    std::uint64_t seed = effective_seed(cfg, opts);
    std::vector<double> rhos{0.0, 0.3, 0.6, 0.9};
    std::vector<std::size_t> ns{64};
    if (cfg.contains("rho_list")) rhos = cfg.at("rho_list").get<std::vector<double>>();
    if (cfg.contains("n_list")) ns = cfg.at("n_list").get<std::vector<std::size_t>>();
    std::size_t dim = cfg.value("dim", 1ULL);
    std::size_t batches = cfg.value("batches", 1000ULL);
    ensure_out_dir(opts.out_dir);

    json rows = json::array();
    for (double rho : rhos)
        for (std::size_t n : ns) {
            mi::GaussianPairModel model(dim, rho);
            auto critic = mi::analytic_critic(model);
            auto log_z = [&model](const Vec& y) { return mi::log_marginal(model, y); };
            Rng rng_nce(seed);
            auto nce = mi::estimate_infonce(model, critic, n, batches, rng_nce);
            Rng rng_id(seed);
            auto ident = mi::estimate_identity(model, critic, log_z, n, batches, rng_id);
            rows.push_back(json{{"rho", rho},
                                {"n", n},
                                {"dim", dim},
                                {"true_mi", mi::true_mi(model)},
                                {"ln_n", std::log(static_cast<double>(n))},
                                {"infonce", nce.estimate},
                                {"infonce_stderr", nce.stderr_},
                                {"infoloob", ident.infoloob.estimate},
                                {"infoloob_stderr", ident.infoloob.stderr_},
                                {"de", ident.de.estimate},
                                {"de_stderr", ident.de.stderr_},
                                {"identity_gap", ident.diff_mean - mi::true_mi(model)},
                                {"identity_gap_stderr", ident.diff_stderr}});
        }
    write_json(opts.out_dir + "/mibench.json",
               json{{"created_at", created_at()},
                    {"seed", seed},
                    {"batches", batches},
                    {"rows", rows}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale contrastive learning laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--seed", opts.seed, "seed override");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--plots", opts.plots, "on|off")
            ->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--threads", opts.threads, "worker threads (default 1)")
            ->check(CLI::PositiveNumber);
        return sub;
    };
    auto* gen = add_common(app.add_subcommand("gen", "generate a synthetic paired dataset"));
    auto* tr = add_common(app.add_subcommand("train", "train one configuration"));
    auto* ab = add_common(app.add_subcommand("ablate", "run the 2x2 loss/retrieval grid"));
    auto* ev = add_common(app.add_subcommand("eval", "retrieval metrics for embeddings"));
    auto* di = add_common(app.add_subcommand("diagnose", "embedding diagnostics"));
    auto* mb = add_common(app.add_subcommand("mibench", "mutual information estimators"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(opts);
        if (tr->parsed()) return cmd_train(opts);
        if (ab->parsed()) return cmd_ablate(opts);
        if (ev->parsed()) return cmd_eval(opts);
        if (di->parsed()) return cmd_diagnose(opts);
        if (mb->parsed()) return cmd_mibench(opts);
    } catch (const train::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 4;
    } catch (const io::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
