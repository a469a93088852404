#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "tcd/graph.hpp"
#include "tcd/tensor.hpp"

namespace tcd {

// Lagged Pearson cross-correlations: values(j, i, l_max - tau) correlates
// X^i_{1..T-tau} with X^j_{tau+1..T}. Raw entries lie in [-1, 1]; the
// normalized variant (abs, then divided by the per-instance max) in [0, 1].
struct CorrTensor {
    RealTensor values;
    bool normalized = false;
};

struct EvalReport {
    std::vector<std::pair<std::string, double>> per_dataset_auc;
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;

    static EvalReport from_aucs(std::vector<std::pair<std::string, double>> aucs);
};

struct WilcoxonResult {
    double statistic = 0.0;   // W+ (sum of ranks of positive differences)
    double p_value = 1.0;
    int n_effective = 0;      // pairs remaining after dropping zero differences
    bool exact = false;
};

// Requires L > l_max + 2. Slots with i >= V or j >= V are zero. Constant
// segments yield 0 (variance guard).
CorrTensor lagged_crosscorr(const Eigen::MatrixXd& series, int max_lag,
                            int v_max);

// abs, then divide by the per-instance max (max-0 guarded).
CorrTensor normalize_cc(const CorrTensor& cc);

// Evaluation mask: 1 for cells belonging to the real (non-padded) variable
// block and to lags the truth graph actually models; self-pair cells included
// iff include_self.
BinaryTensor make_eval_mask(int num_vars, int graph_max_lag, int v_max,
                            int max_lag, bool include_self = true);

// Mann-Whitney AUC with midrank tie handling over the masked cells. Throws if
// the masked truth is all-positive or all-negative.
double auc(const RealTensor& scores, const LaggedGraph& truth,
           const BinaryTensor& mask);

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
// dropped; ties among |d| receive average ranks. Exact null by full sign
// enumeration for n_effective <= exact_cutoff, normal approximation with tie
// correction above. Requires >= 5 nonzero pairs.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    int exact_cutoff = 20);

std::vector<bool> bonferroni(const std::vector<double>& p_values, double alpha);

nlohmann::json report_to_json(const EvalReport& r);
std::string report_to_table(const EvalReport& r);

}  // namespace tcd
