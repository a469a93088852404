// Command-line surface for corpus generation, baseline scoring, toy-model
// training, and evaluation statistics.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 degenerate
// statistics input.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tcd/baselines.hpp"
#include "tcd/corpus.hpp"
#include "tcd/rng.hpp"
#include "tcd/stats.hpp"
#include "tcd/toy_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliError : std::runtime_error {
    CliError(int code_, const std::string& what) : std::runtime_error(what), code(code_) {}
    int code;
};

void parse_range_int(const std::string& s, int& lo, int& hi) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        lo = hi = std::stoi(s);
    } else {
        lo = std::stoi(s.substr(0, colon));
        hi = std::stoi(s.substr(colon + 1));
    }
}

void parse_range_double(const std::string& s, double& lo, double& hi) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        lo = hi = std::stod(s);
    } else {
        lo = std::stod(s.substr(0, colon));
        hi = std::stod(s.substr(colon + 1));
    }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed,
                           bool entropy) {
    if (seed) return *seed;
    if (!entropy)
        throw CliError(kExitConfig,
                       "randomized command requires --seed (or pass --entropy "
                       "to opt out of reproducibility)");
    return std::random_device{}();
}

json load_json_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw CliError(kExitIo, "cannot open " + path.string());
    json j;
    f >> j;
    return j;
}

// Pairs NNNNNNN.tci with NNNNNNN.tcs and computes per-instance AUCs.
tcd::EvalReport evaluate_scores(const fs::path& corpus_dir,
                                const fs::path& score_dir,
                                bool include_self) {
    std::vector<std::pair<std::string, double>> aucs;
    for (const auto& file : tcd::list_corpus_files(corpus_dir)) {
        const fs::path score_path =
            score_dir / file.stem().replace_extension(".tcs");
        if (!fs::exists(score_path))
            throw CliError(kExitIo, "missing score file " + score_path.string());
        const tcd::SeriesInstance inst = tcd::read_instance(file);
        const tcd::ScoreTensor scores = tcd::read_scores(score_path);
        const tcd::BinaryTensor mask = tcd::make_eval_mask(
            inst.graph.num_vars, inst.graph.max_lag, scores.values.num_vars(),
            scores.values.num_slices(), include_self);
        try {
            aucs.emplace_back(inst.id,
                              tcd::auc(scores.values, inst.graph, mask));
        } catch (const std::runtime_error& e) {
            throw DegenerateError(std::string(e.what()) + " (instance " +
                                  inst.id + ")");
        }
    }
    return tcd::EvalReport::from_aucs(std::move(aucs));
}

std::vector<tcd::SeriesInstance> load_corpus(const fs::path& dir) {
    std::vector<tcd::SeriesInstance> corpus;
    for (const auto& file : tcd::list_corpus_files(dir))
        corpus.push_back(tcd::read_instance(file));
    return corpus;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal causal discovery corpus, baseline, and evaluation toolkit"};
    app.require_subcommand(1);

    // ---- generate ----------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "build a synthetic corpus");
    struct {
        int count = 100;
        std::string vars = "3:5";
        std::string density = "0.1:0.4";
        int steps = 500;
        int max_lag = 3;
        int min_lag = 1;
        int warmup = 100;
        bool no_self = false;
        bool linear_only = false;
        std::vector<std::string> mixture;
        std::optional<std::uint64_t> seed;
        bool entropy = false;
        int jobs = 1;
        std::string config;
        std::string out_dir;
    } gen;
    generate->add_option("--count", gen.count, "number of instances");
    generate->add_option("--vars", gen.vars, "variable count range lo:hi");
    generate->add_option("--density", gen.density, "edge density range lo:hi");
    generate->add_option("--steps", gen.steps, "time steps per instance");
    generate->add_option("--max-lag", gen.max_lag);
    generate->add_option("--min-lag", gen.min_lag);
    generate->add_option("--warmup", gen.warmup);
    generate->add_flag("--no-self-lagged", gen.no_self,
                       "exclude autoregressive self edges");
    generate->add_flag("--linear-only", gen.linear_only,
                       "restrict mechanisms to linear");
    generate->add_option("--mixture", gen.mixture,
                         "mixture component source=proportion (repeatable)");
    generate->add_option("--seed", gen.seed);
    generate->add_flag("--entropy", gen.entropy);
    generate->add_option("--jobs", gen.jobs, "parallel workers");
    generate->add_option("--config", gen.config, "JSON spec file (flags override)");
    generate->add_option("out_dir", gen.out_dir, "output directory")->required();

    // ---- baseline ----------------------------------------------------------
    auto* baseline = app.add_subcommand("baseline", "run a classical scorer over a corpus");
    struct {
        std::string corpus_dir;
        std::string method = "corr";
        std::string out_dir;
        int max_lag = 3;
        double ridge = 1e-3;
        int bootstrap = 0;
        int block_len = 25;
        double threshold_q = 0.15;
        bool iid_rows = false;
        std::optional<std::uint64_t> seed;
        bool entropy = false;
        bool as_json = false;
    } base;
    baseline->add_option("corpus_dir", base.corpus_dir)->required();
    baseline->add_option("--method", base.method, "corr | var");
    baseline->add_option("--out", base.out_dir, "directory for .tcs score files");
    baseline->add_option("--max-lag", base.max_lag);
    baseline->add_option("--ridge", base.ridge);
    baseline->add_option("--bootstrap", base.bootstrap,
                         "wrap scorer in n bootstrap resamples");
    baseline->add_option("--block-len", base.block_len);
    baseline->add_option("--threshold-q", base.threshold_q,
                         "top-q binarization quantile");
    baseline->add_flag("--iid-rows", base.iid_rows,
                       "literal row resampling instead of moving blocks");
    baseline->add_option("--seed", base.seed);
    baseline->add_flag("--entropy", base.entropy);
    baseline->add_flag("--json", base.as_json);

    // ---- train -------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train the toy predictor");
    struct {
        std::string corpus_dir;
        std::string out = "model.tcm";
        std::string history;
        int v_max = 12;
        int max_lag = 3;
        int hidden = 64;
        int epochs = 30;
        int batch = 32;
        double lr = 0.5;
        double momentum = 0.9;
        double lambda_edge = 1.0;
        double lambda_corr = 0.75;
        double gamma = 2.0;
        std::optional<std::uint64_t> seed;
        bool entropy = false;
        bool as_json = false;
    } tr;
    train_cmd->add_option("corpus_dir", tr.corpus_dir)->required();
    train_cmd->add_option("--out", tr.out, "checkpoint path");
    train_cmd->add_option("--history", tr.history, "CSV history path");
    train_cmd->add_option("--vmax", tr.v_max);
    train_cmd->add_option("--max-lag", tr.max_lag);
    train_cmd->add_option("--hidden", tr.hidden);
    train_cmd->add_option("--epochs", tr.epochs);
    train_cmd->add_option("--batch", tr.batch);
    train_cmd->add_option("--lr", tr.lr);
    train_cmd->add_option("--momentum", tr.momentum);
    train_cmd->add_option("--lambda-edge", tr.lambda_edge);
    train_cmd->add_option("--lambda-corr", tr.lambda_corr);
    train_cmd->add_option("--gamma", tr.gamma);
    train_cmd->add_option("--seed", tr.seed);
    train_cmd->add_flag("--entropy", tr.entropy);
    train_cmd->add_flag("--json", tr.as_json);

    // ---- predict -----------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "score instances with a checkpoint");
    struct {
        std::string model;
        std::string corpus_dir;
        std::string out_dir;
        bool as_json = false;
    } pr;
    predict_cmd->add_option("--model", pr.model)->required();
    predict_cmd->add_option("corpus_dir", pr.corpus_dir)->required();
    predict_cmd->add_option("--out", pr.out_dir, "directory for .tcs files")->required();
    predict_cmd->add_flag("--json", pr.as_json);

    // ---- eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "AUC report for stored scores");
    struct {
        std::string corpus_dir;
        std::string score_dir;
        bool exclude_self = false;
        bool as_json = false;
        std::string out;
    } ev;
    eval_cmd->add_option("corpus_dir", ev.corpus_dir)->required();
    eval_cmd->add_option("score_dir", ev.score_dir)->required();
    eval_cmd->add_flag("--exclude-self", ev.exclude_self);
    eval_cmd->add_flag("--json", ev.as_json);
    eval_cmd->add_option("--out", ev.out, "write report JSON here");

    // ---- stats -------------------------------------------------------------
    auto* stats_cmd = app.add_subcommand(
        "stats", "Wilcoxon signed-rank comparison of two eval reports");
    struct {
        std::string report_a;
        std::string report_b;
        double alpha = 0.05;
        int comparisons = 1;
        bool as_json = false;
    } st;
    stats_cmd->add_option("report_a", st.report_a)->required();
    stats_cmd->add_option("report_b", st.report_b)->required();
    stats_cmd->add_option("--alpha", st.alpha);
    stats_cmd->add_option("-k,--comparisons", st.comparisons,
                          "total comparisons for the Bonferroni correction");
    stats_cmd->add_flag("--json", st.as_json);

    // ---- params ------------------------------------------------------------
    auto* params_cmd = app.add_subcommand(
        "params", "closed-form parameter count for the encoder architecture");
    tcd::ArchConfig arch;
    bool no_distil = false;
    bool no_train_aid = false;
    bool params_json = false;
    params_cmd->add_option("--blocks", arch.blocks);
    params_cmd->add_option("--d-model", arch.d_model);
    params_cmd->add_option("--n-heads", arch.n_heads);
    params_cmd->add_option("--d-ff", arch.d_ff);
    params_cmd->add_option("--kernel", arch.kernel);
    params_cmd->add_option("--vmax", arch.v_max);
    params_cmd->add_option("--max-lag", arch.max_lag);
    params_cmd->add_flag("--no-distil", no_distil);
    params_cmd->add_flag("--no-train-aid", no_train_aid);
    params_cmd->add_flag("--json", params_json);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            tcd::CorpusSpec spec;
            if (!gen.config.empty())
                spec = tcd::CorpusSpec::from_json(load_json_file(gen.config));
            spec.count = gen.count;
            parse_range_int(gen.vars, spec.vars_min, spec.vars_max);
            parse_range_double(gen.density, spec.density_min, spec.density_max);
            spec.num_steps = gen.steps;
            spec.max_lag = gen.max_lag;
            spec.min_lag = gen.min_lag;
            spec.warmup = gen.warmup;
            spec.allow_self_lagged = !gen.no_self;
            if (gen.linear_only)
                spec.policy.enabled_kinds = {tcd::MechanismKind::Linear};
            if (!gen.mixture.empty()) {
                spec.mixture.clear();
                for (const auto& m : gen.mixture) {
                    const auto eq = m.rfind('=');
                    if (eq == std::string::npos)
                        throw CliError(kExitConfig,
                                       "--mixture expects source=proportion");
                    spec.mixture.push_back(
                        {m.substr(0, eq), std::stod(m.substr(eq + 1))});
                }
            }
            spec.seed = resolve_seed(gen.seed, gen.entropy);
            spec.validate();
            std::error_code ec;
            fs::create_directories(gen.out_dir, ec);
            if (ec)
                throw CliError(kExitIo, "cannot create output directory " +
                                            gen.out_dir + ": " + ec.message());
            const tcd::CorpusManifest manifest =
                tcd::build_corpus(spec, gen.out_dir, gen.jobs);
            json out{{"count", manifest.count},
                     {"rejections", manifest.rejections},
                     {"content_hash", manifest.content_hash}};
            std::cout << out.dump() << "\n";
            return 0;
        }

        if (*baseline) {
            if (!fs::exists(base.corpus_dir))
                throw CliError(kExitIo, "corpus directory does not exist: " +
                                            base.corpus_dir);
            tcd::Scorer scorer;
            if (base.method == "corr") {
                scorer = [&](const tcd::SeriesInstance& in) {
                    return tcd::corr_scorer(in, base.max_lag);
                };
            } else if (base.method == "var") {
                scorer = [&](const tcd::SeriesInstance& in) {
                    return tcd::var_granger_scorer(in, base.max_lag, base.ridge);
                };
            } else {
                throw CliError(kExitConfig, "unknown method: " + base.method);
            }

            tcd::BootstrapConfig bcfg;
            if (base.bootstrap > 0) {
                bcfg.n = base.bootstrap;
                bcfg.block_len = base.block_len;
                bcfg.threshold_quantile = base.threshold_q;
                bcfg.iid_rows = base.iid_rows;
                bcfg.seed = resolve_seed(base.seed, base.entropy);
                bcfg.validate(base.max_lag);
            }

            std::vector<std::pair<std::string, double>> aucs;
            int idx = 0;
            for (const auto& file : tcd::list_corpus_files(base.corpus_dir)) {
                const tcd::SeriesInstance inst = tcd::read_instance(file);
                tcd::ScoreTensor scores;
                if (base.bootstrap > 0) {
                    tcd::BootstrapConfig instance_cfg = bcfg;
                    instance_cfg.seed = tcd::derive_seed(bcfg.seed, idx);
                    scores = tcd::bootstrap_probabilities(inst, scorer,
                                                          instance_cfg,
                                                          base.max_lag);
                } else {
                    scores = scorer(inst);
                }
                if (!base.out_dir.empty()) {
                    fs::create_directories(base.out_dir);
                    tcd::write_scores(
                        scores, fs::path(base.out_dir) /
                                    file.stem().replace_extension(".tcs"));
                }
                const tcd::BinaryTensor mask = tcd::make_eval_mask(
                    inst.graph.num_vars, inst.graph.max_lag,
                    scores.values.num_vars(), scores.values.num_slices());
                try {
                    aucs.emplace_back(inst.id,
                                      tcd::auc(scores.values, inst.graph, mask));
                } catch (const std::runtime_error& e) {
                    throw DegenerateError(std::string(e.what()) +
                                          " (instance " + inst.id + ")");
                }
                ++idx;
            }
            const tcd::EvalReport report =
                tcd::EvalReport::from_aucs(std::move(aucs));
            if (base.as_json)
                std::cout << tcd::report_to_json(report).dump() << "\n";
            else
                std::cout << tcd::report_to_table(report);
            return 0;
        }

        if (*train_cmd) {
            if (!fs::exists(tr.corpus_dir))
                throw CliError(kExitIo,
                               "corpus directory does not exist: " + tr.corpus_dir);
            const auto corpus = load_corpus(tr.corpus_dir);
            if (corpus.empty())
                throw CliError(kExitConfig, "training corpus is empty");
            const std::uint64_t seed = resolve_seed(tr.seed, tr.entropy);
            tcd::ToyPredictor model =
                tcd::ToyPredictor::init(tr.v_max, tr.max_lag, tr.hidden, seed);
            tcd::LossConfig loss_cfg;
            loss_cfg.lambda_edge = tr.lambda_edge;
            loss_cfg.lambda_corr = tr.lambda_corr;
            loss_cfg.gamma = tr.gamma;
            tcd::TrainConfig train_cfg;
            train_cfg.learning_rate = tr.lr;
            train_cfg.momentum = tr.momentum;
            train_cfg.epochs = tr.epochs;
            train_cfg.batch_size = tr.batch;
            train_cfg.seed = tcd::derive_seed(seed, 1);
            const tcd::TrainHistory history =
                tcd::train(corpus, model, loss_cfg, train_cfg);
            tcd::write_checkpoint(model, tr.out);
            if (!tr.history.empty()) {
                std::ofstream hf(tr.history, std::ios::trunc);
                if (!hf) throw CliError(kExitIo, "cannot write " + tr.history);
                hf << history.to_csv();
            }
            json out{{"epochs", history.epochs.size()},
                     {"best_epoch", history.best_epoch},
                     {"best_val_auc", history.best_val_auc},
                     {"checkpoint", tr.out}};
            std::cout << out.dump() << "\n";
            return 0;
        }

        if (*predict_cmd) {
            const tcd::ToyPredictor model = tcd::read_checkpoint(pr.model);
            fs::create_directories(pr.out_dir);
            int n = 0;
            for (const auto& file : tcd::list_corpus_files(pr.corpus_dir)) {
                const tcd::SeriesInstance inst = tcd::read_instance(file);
                tcd::ScoreTensor scores;
                scores.values = tcd::predict(model, inst);
                scores.kind = tcd::ScoreKind::Probability;
                tcd::write_scores(scores,
                                  fs::path(pr.out_dir) /
                                      file.stem().replace_extension(".tcs"));
                ++n;
            }
            std::cout << json{{"scored", n}}.dump() << "\n";
            return 0;
        }

        if (*eval_cmd) {
            const tcd::EvalReport report =
                evaluate_scores(ev.corpus_dir, ev.score_dir, !ev.exclude_self);
            if (!ev.out.empty()) {
                std::ofstream f(ev.out, std::ios::trunc);
                if (!f) throw CliError(kExitIo, "cannot write " + ev.out);
                f << tcd::report_to_json(report).dump(2) << "\n";
            }
            if (ev.as_json)
                std::cout << tcd::report_to_json(report).dump() << "\n";
            else
                std::cout << tcd::report_to_table(report);
            return 0;
        }

        if (*stats_cmd) {
            const json ja = load_json_file(st.report_a);
            const json jb = load_json_file(st.report_b);
            std::vector<double> a;
            std::vector<double> b;
            for (const auto& e : ja.at("per_dataset_auc"))
                a.push_back(e.at("auc").get<double>());
            for (const auto& e : jb.at("per_dataset_auc"))
                b.push_back(e.at("auc").get<double>());
            if (a.size() != b.size())
                throw CliError(kExitConfig,
                               "reports cover different numbers of datasets");
            tcd::WilcoxonResult w;
            try {
                w = tcd::wilcoxon_signed_rank(a, b);
            } catch (const std::invalid_argument& e) {
                throw DegenerateError(e.what());
            }
            const double corrected = st.alpha / st.comparisons;
            const bool significant = w.p_value < corrected;
            json out{{"statistic", w.statistic},
                     {"p_value", w.p_value},
                     {"n_effective", w.n_effective},
                     {"exact", w.exact},
                     {"alpha_corrected", corrected},
                     {"significant", significant}};
            if (st.as_json) {
                std::cout << out.dump() << "\n";
            } else {
                std::cout << "W+ = " << w.statistic << ", p = " << w.p_value
                          << (w.exact ? " (exact)" : " (normal approx)")
                          << ", n_eff = " << w.n_effective << "\n"
                          << "alpha/k = " << corrected << " -> "
                          << (significant ? "significant" : "not significant")
                          << "\n";
            }
            return 0;
        }

        if (*params_cmd) {
            arch.distil = no_distil ? 0 : 1;
            arch.train_aid = no_train_aid ? 0 : 1;
            const tcd::ParamBreakdown p = tcd::param_count(arch);
            json out{{"embedding", p.embedding}, {"encoder", p.encoder},
                     {"distil", p.distil},       {"head_hidden", p.head_hidden},
                     {"head_output", p.head_output}, {"total", p.total},
                     {"note", p.note}};
            if (params_json) {
                std::cout << out.dump() << "\n";
            } else {
                std::cout << "embedding   " << p.embedding << "\n"
                          << "encoder     " << p.encoder << "\n"
                          << "distil      " << p.distil << "\n"
                          << "head hidden " << p.head_hidden << "\n"
                          << "head output " << p.head_output << "\n"
                          << "total       " << p.total << "\n"
                          << "note: " << p.note << "\n";
            }
            return 0;
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
