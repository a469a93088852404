#include "tcd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "tcd/container.hpp"
#include "tcd/rng.hpp"

namespace tcd {

namespace {
constexpr char kScoreMagic[4] = {'T', 'C', 'D', 'S'};
}

std::string to_string(ScoreKind k) {
    switch (k) {
        case ScoreKind::Probability: return "probability";
        case ScoreKind::Confidence: return "confidence";
        case ScoreKind::Coefficient: return "coefficient";
    }
    throw std::logic_error("to_string(ScoreKind): bad enum");
}

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "probability") return ScoreKind::Probability;
    if (s == "confidence") return ScoreKind::Confidence;
    if (s == "coefficient") return ScoreKind::Coefficient;
    throw std::invalid_argument("unknown score kind: " + s);
}

void ScoreTensor::validate() const {
    for (double v : values.data()) {
        if (!std::isfinite(v))
            throw std::runtime_error("ScoreTensor: non-finite entry");
        if (kind == ScoreKind::Probability && (v < 0.0 || v > 1.0))
            throw std::runtime_error("ScoreTensor: probability outside [0, 1]");
    }
}

void BootstrapConfig::validate(int max_lag) const {
    if (n < 1) throw std::invalid_argument("BootstrapConfig: n < 1");
    if (block_len < max_lag + 1)
        throw std::invalid_argument("BootstrapConfig: block_len < max_lag + 1");
    if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0))
        throw std::invalid_argument("BootstrapConfig: threshold_quantile outside (0, 1)");
}

ScoreTensor corr_scorer(const SeriesInstance& inst, int max_lag, int v_max) {
    inst.validate();
    if (v_max <= 0) v_max = inst.graph.num_vars;
    ScoreTensor out;
    out.values = normalize_cc(lagged_crosscorr(inst.series, max_lag, v_max)).values;
    out.kind = ScoreKind::Confidence;
    return out;
}

ScoreTensor var_granger_scorer(const SeriesInstance& inst, int max_lag,
                               double ridge, int v_max) {
    inst.validate();
    const int length = static_cast<int>(inst.series.rows());
    const int num_vars = static_cast<int>(inst.series.cols());
    if (v_max <= 0) v_max = num_vars;
    if (length <= num_vars * max_lag + 10)
        throw std::invalid_argument("var_granger_scorer: series too short");

    const int n = length - max_lag;
    const int p = num_vars * max_lag + 1;  // lag predictors + intercept

    Eigen::MatrixXd design(n, p);
    for (int t = 0; t < n; ++t) {
        for (int lag = 1; lag <= max_lag; ++lag)
            for (int i = 0; i < num_vars; ++i)
                design(t, (lag - 1) * num_vars + i) =
                    inst.series(t + max_lag - lag, i);
        design(t, p - 1) = 1.0;
    }

    const Eigen::MatrixXd gram = design.transpose() * design;
    Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(p, p);
    if (ridge > 0.0) {
        const double lambda = ridge * gram.trace() / p;
        penalty = lambda * Eigen::MatrixXd::Identity(p, p);
        penalty(p - 1, p - 1) = 0.0;  // intercept unpenalized
    }

    const Eigen::MatrixXd regularized = gram + penalty;
    const Eigen::LDLT<Eigen::MatrixXd> solver(regularized);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("var_granger_scorer: singular design matrix");
    const Eigen::MatrixXd inv = solver.solve(Eigen::MatrixXd::Identity(p, p));
    // Covariance sandwich for the ridge estimator; reduces to sigma^2 (X'X)^-1
    // when ridge = 0.
    const Eigen::MatrixXd sandwich = inv * gram * inv;

    ScoreTensor out;
    out.values = RealTensor(v_max, max_lag, 0.0);
    out.kind = ScoreKind::Confidence;

    for (int j = 0; j < num_vars; ++j) {
        const Eigen::VectorXd target = inst.series.col(j).tail(n);
        const Eigen::VectorXd coef = solver.solve(design.transpose() * target);
        const double rss = (target - design * coef).squaredNorm();
        const int dof = std::max(1, n - p);
        const double sigma2 = rss / dof;
        for (int lag = 1; lag <= max_lag; ++lag)
            for (int i = 0; i < num_vars; ++i) {
                const int col = (lag - 1) * num_vars + i;
                const double se = std::sqrt(sigma2 * sandwich(col, col));
                const double t_stat = se > 0.0 ? std::abs(coef(col)) / se : 0.0;
                if (!std::isfinite(t_stat))
                    throw std::runtime_error(
                        "var_granger_scorer: non-finite t-statistic (singular design)");
                out.values(j, i, max_lag - lag) = t_stat;
            }
    }
    return out;
}

namespace {

Eigen::MatrixXd resample_series(const Eigen::MatrixXd& series,
                                const BootstrapConfig& cfg, Rng& rng) {
    const int length = static_cast<int>(series.rows());
    Eigen::MatrixXd out(length, series.cols());
    if (cfg.iid_rows) {
        for (int t = 0; t < length; ++t)
            out.row(t) = series.row(static_cast<int>(rng.below(length)));
        return out;
    }
    const int block = std::min(cfg.block_len, length);
    int filled = 0;
    while (filled < length) {
        const int start = static_cast<int>(rng.below(length - block + 1));
        const int take = std::min(block, length - filled);
        out.middleRows(filled, take) = series.middleRows(start, take);
        filled += take;
    }
    return out;
}

}  // namespace

ScoreTensor bootstrap_probabilities(const SeriesInstance& inst,
                                    const Scorer& scorer,
                                    const BootstrapConfig& cfg, int max_lag) {
    inst.validate();
    cfg.validate(max_lag);

    RealTensor accum;
    int successes = 0;
    int failures = 0;
    std::string last_error;

    Rng rng(cfg.seed);
    for (int b = 0; b < cfg.n; ++b) {
        SeriesInstance resampled = inst;
        resampled.series = resample_series(inst.series, cfg, rng);
        ScoreTensor scored;
        try {
            scored = scorer(resampled);
        } catch (const std::exception& e) {
            ++failures;
            last_error = e.what();
            continue;
        }
        if (accum.size() == 0)
            accum = RealTensor(scored.values.num_vars(),
                               scored.values.num_slices(), 0.0);

        // Binarize: top-q quantile threshold over all cells.
        std::vector<double> sorted(scored.values.data());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t cut = static_cast<std::size_t>(
            (1.0 - cfg.threshold_quantile) * (sorted.size() - 1));
        const double threshold = sorted[cut];
        for (std::size_t k = 0; k < accum.data().size(); ++k)
            if (scored.values.data()[k] > threshold) accum.data()[k] += 1.0;
        ++successes;
    }

    if (failures * 2 >= cfg.n)
        throw std::runtime_error(
            "bootstrap_probabilities: scorer failed on " +
            std::to_string(failures) + "/" + std::to_string(cfg.n) +
            " resamples; last error: " + last_error);

    ScoreTensor out;
    out.values = accum;
    for (auto& v : out.values.data()) v /= successes;
    out.kind = ScoreKind::Probability;
    return out;
}

void write_scores(const ScoreTensor& scores,
                  const std::filesystem::path& path) {
    scores.validate();
    Container c;
    std::copy(kScoreMagic, kScoreMagic + 4, c.magic.begin());
    c.meta = nlohmann::json{{"v_max", scores.values.num_vars()},
                            {"max_lag", scores.values.num_slices()},
                            {"kind", to_string(scores.kind)}};
    std::vector<float> payload(scores.values.data().begin(),
                               scores.values.data().end());
    c.payload = pack_f32(payload);
    write_bytes(path, container_serialize(c));
}

ScoreTensor read_scores(const std::filesystem::path& path) {
    const Container c = container_deserialize(read_bytes(path), kScoreMagic);
    const int v_max = c.meta.at("v_max").get<int>();
    const int max_lag = c.meta.at("max_lag").get<int>();
    ScoreTensor out;
    out.kind = score_kind_from_string(c.meta.at("kind").get<std::string>());
    out.values = RealTensor(v_max, max_lag);
    const std::vector<float> payload = unpack_f32(c.payload);
    if (payload.size() != out.values.size())
        throw std::runtime_error("scores: payload size mismatch");
    for (std::size_t k = 0; k < payload.size(); ++k)
        out.values.data()[k] = payload[k];
    out.validate();
    return out;
}

}  // namespace tcd
