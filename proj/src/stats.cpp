#include "tcd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tcd {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Midranks (1-based, average over ties) for the given values.
std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

CorrTensor lagged_crosscorr(const Eigen::MatrixXd& series, int max_lag,
                            int v_max) {
    const int length = static_cast<int>(series.rows());
    const int num_vars = static_cast<int>(series.cols());
    if (max_lag < 1) throw std::invalid_argument("lagged_crosscorr: max_lag < 1");
    if (v_max < num_vars)
        throw std::invalid_argument("lagged_crosscorr: v_max < num_vars");
    if (length <= max_lag + 2)
        throw std::invalid_argument("lagged_crosscorr: series too short");

    CorrTensor cc{RealTensor(v_max, max_lag), false};
    for (int tau = 1; tau <= max_lag; ++tau) {
        const int n = length - tau;
        for (int i = 0; i < num_vars; ++i) {
            const auto x = series.col(i).head(n);
            const double mx = x.mean();
            const double vx = (x.array() - mx).square().sum();
            for (int j = 0; j < num_vars; ++j) {
                const auto y = series.col(j).tail(n);
                const double my = y.mean();
                const double vy = (y.array() - my).square().sum();
                double rho = 0.0;
                if (vx > 1e-24 && vy > 1e-24) {
                    const double cov =
                        ((x.array() - mx) * (y.array() - my)).sum();
                    rho = cov / std::sqrt(vx * vy);
                    rho = std::clamp(rho, -1.0, 1.0);
                }
                cc.values(j, i, max_lag - tau) = rho;
            }
        }
    }
    return cc;
}

CorrTensor normalize_cc(const CorrTensor& cc) {
    CorrTensor out{cc.values, true};
    double max_abs = 0.0;
    for (auto& v : out.values.data()) {
        v = std::abs(v);
        max_abs = std::max(max_abs, v);
    }
    if (max_abs > 0.0)
        for (auto& v : out.values.data()) v /= max_abs;
    return out;
}

BinaryTensor make_eval_mask(int num_vars, int graph_max_lag, int v_max,
                            int max_lag, bool include_self) {
    if (graph_max_lag > max_lag)
        throw std::invalid_argument("make_eval_mask: graph_max_lag > max_lag");
    BinaryTensor mask(v_max, max_lag, 0);
    for (int j = 0; j < num_vars; ++j)
        for (int i = 0; i < num_vars; ++i) {
            if (i == j && !include_self) continue;
            for (int lag = 1; lag <= graph_max_lag; ++lag)
                mask(j, i, max_lag - lag) = 1;
        }
    return mask;
}

double auc(const RealTensor& scores, const LaggedGraph& truth,
           const BinaryTensor& mask) {
    if (!scores.same_shape(RealTensor(mask.num_vars(), mask.num_slices())))
        throw std::invalid_argument("auc: score/mask shape mismatch");
    const int v_max = scores.num_vars();
    const int max_lag = scores.num_slices();
    if (truth.num_vars > v_max || truth.max_lag > max_lag)
        throw std::invalid_argument("auc: truth exceeds score dimensions");

    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    for (int j = 0; j < v_max; ++j)
        for (int i = 0; i < v_max; ++i)
            for (int s = 0; s < max_lag; ++s) {
                if (!mask(j, i, s)) continue;
                const int lag = max_lag - s;
                std::uint8_t label = 0;
                if (i < truth.num_vars && j < truth.num_vars &&
                    lag <= truth.max_lag)
                    label = truth.has_edge(i, j, lag) ? 1 : 0;
                values.push_back(scores(j, i, s));
                labels.push_back(label);
            }

    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::runtime_error("auc: degenerate truth (all-positive or all-negative)");

    const std::vector<double> ranks = midranks(values);
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k]) rank_sum_pos += ranks[k];
    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    int exact_cutoff) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon: size mismatch");
    std::vector<double> diffs;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        if (d != 0.0) diffs.push_back(d);
    }
    const int n = static_cast<int>(diffs.size());
    if (n < 5)
        throw std::invalid_argument(
            "wilcoxon: fewer than 5 nonzero differences");

    std::vector<double> abs_d(diffs.size());
    std::transform(diffs.begin(), diffs.end(), abs_d.begin(),
                   [](double d) { return std::abs(d); });
    const std::vector<double> ranks = midranks(abs_d);

    double w_plus = 0.0;
    for (int k = 0; k < n; ++k)
        if (diffs[k] > 0.0) w_plus += ranks[k];

    WilcoxonResult res;
    res.statistic = w_plus;
    res.n_effective = n;

    if (n <= exact_cutoff) {
        // Full enumeration of the 2^n sign assignments (ties in |d| included
        // via the midranks, so the null support is walked exactly).
        const std::uint64_t total = 1ULL << n;
        std::uint64_t count_le = 0;
        std::uint64_t count_ge = 0;
        constexpr double kEps = 1e-9;
        for (std::uint64_t pattern = 0; pattern < total; ++pattern) {
            double w = 0.0;
            for (int k = 0; k < n; ++k)
                if (pattern & (1ULL << k)) w += ranks[k];
            if (w <= w_plus + kEps) ++count_le;
            if (w >= w_plus - kEps) ++count_ge;
        }
        const double tail =
            static_cast<double>(std::min(count_le, count_ge)) /
            static_cast<double>(total);
        res.p_value = std::min(1.0, 2.0 * tail);
        res.exact = true;
    } else {
        const double mu = n * (n + 1) / 4.0;
        double tie_term = 0.0;
        {
            std::vector<double> sorted = abs_d;
            std::sort(sorted.begin(), sorted.end());
            std::size_t i = 0;
            while (i < sorted.size()) {
                std::size_t j = i;
                while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
                const double t = static_cast<double>(j - i + 1);
                tie_term += t * t * t - t;
                i = j + 1;
            }
        }
        const double sigma2 =
            n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_term / 48.0;
        if (sigma2 <= 0.0)
            throw std::runtime_error("wilcoxon: zero variance under ties");
        const double dev = w_plus - mu;
        const double cc = dev > 0.0 ? -0.5 : (dev < 0.0 ? 0.5 : 0.0);
        const double z = (dev + cc) / std::sqrt(sigma2);
        res.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
        res.exact = false;
    }
    return res;
}

std::vector<bool> bonferroni(const std::vector<double>& p_values, double alpha) {
    if (p_values.empty())
        throw std::invalid_argument("bonferroni: empty p-value list");
    const double threshold = alpha / static_cast<double>(p_values.size());
    std::vector<bool> flags(p_values.size());
    for (std::size_t k = 0; k < p_values.size(); ++k)
        flags[k] = p_values[k] < threshold;
    return flags;
}

EvalReport EvalReport::from_aucs(
    std::vector<std::pair<std::string, double>> aucs) {
    EvalReport r;
    r.per_dataset_auc = std::move(aucs);
    r.n = static_cast<int>(r.per_dataset_auc.size());
    if (r.n == 0) return r;
    double sum = 0.0;
    for (const auto& [id, v] : r.per_dataset_auc) sum += v;
    r.mean = sum / r.n;
    if (r.n > 1) {
        double ss = 0.0;
        for (const auto& [id, v] : r.per_dataset_auc)
            ss += (v - r.mean) * (v - r.mean);
        r.sd = std::sqrt(ss / (r.n - 1));
    }
    return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& [id, v] : r.per_dataset_auc)
        per.push_back({{"id", id}, {"auc", v}});
    return nlohmann::json{{"per_dataset_auc", per},
                          {"mean", r.mean},
                          {"sd", r.sd},
                          {"n", r.n}};
}

std::string report_to_table(const EvalReport& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    for (const auto& [id, v] : r.per_dataset_auc) {
        os.width(24);
        os << std::left << id << std::right << " " << v << "\n";
    }
    os.width(24);
    os << std::left << "mean +/- sd" << std::right << " " << r.mean
       << " +/- " << r.sd << "  (n=" << r.n << ")\n";
    return os.str();
}

}  // namespace tcd
