#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "tcd/corpus.hpp"
#include "tcd/stats.hpp"
#include "tcd/tensor.hpp"

namespace tcd {

enum class ScoreKind { Probability, Confidence, Coefficient };

std::string to_string(ScoreKind k);
ScoreKind score_kind_from_string(const std::string& s);

struct ScoreTensor {
    RealTensor values;  // V_max x V_max x max_lag
    ScoreKind kind = ScoreKind::Confidence;

    void validate() const;
};

struct BootstrapConfig {
    int n = 10;
    int block_len = 25;        // must be >= max_lag + 1
    double threshold_quantile = 0.15;  // top-q binarization for confidence scorers
    bool iid_rows = false;     // literal row resampling (destroys lag structure)
    std::uint64_t seed = 0;

    void validate(int max_lag) const;
};

// No-learning baseline: normalized lagged cross-correlations as confidences.
ScoreTensor corr_scorer(const SeriesInstance& inst, int max_lag,
                        int v_max = 0);

// Ridge-regularized VAR(max_lag) per target; scores are |t-statistics| of the
// lag coefficients. ridge is scaled by trace(X'X)/p; pass 0 for bare OLS.
ScoreTensor var_granger_scorer(const SeriesInstance& inst, int max_lag,
                               double ridge = 1e-3, int v_max = 0);

using Scorer = std::function<ScoreTensor(const SeriesInstance&)>;

// Moving-block bootstrap edge probabilities: resample, score, binarize via the
// top-q threshold rule, accumulate, divide by n.
ScoreTensor bootstrap_probabilities(const SeriesInstance& inst,
                                    const Scorer& scorer,
                                    const BootstrapConfig& cfg, int max_lag);

// Score container IO (.tcs), same framing as instances.
void write_scores(const ScoreTensor& scores, const std::filesystem::path& path);
ScoreTensor read_scores(const std::filesystem::path& path);

}  // namespace tcd
