#include "tcd/tscm.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tcd/rng.hpp"

namespace tcd {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double scalar_transform(MechanismKind k, double x) {
    switch (k) {
        case MechanismKind::Exponential: return std::exp(x);
        case MechanismKind::Sinusoid: return std::sin(x);
        case MechanismKind::LogAbs: return std::log(1.0 + std::abs(x));
        case MechanismKind::Tanh: return std::tanh(x);
        case MechanismKind::Sigmoid: return sigmoid(x);
        default: throw std::logic_error("scalar_transform: not a per-parent kind");
    }
}

double apply_wrap(BoundedWrap w, double x) {
    switch (w) {
        case BoundedWrap::None: return x;
        case BoundedWrap::Tanh: return std::tanh(x);
        case BoundedWrap::Sigmoid: return sigmoid(x);
    }
    return x;
}

}  // namespace

std::string to_string(MechanismKind k) {
    switch (k) {
        case MechanismKind::Linear: return "linear";
        case MechanismKind::Polynomial: return "polynomial";
        case MechanismKind::Exponential: return "exponential";
        case MechanismKind::Sinusoid: return "sinusoid";
        case MechanismKind::MultiplicativePair: return "multiplicative_pair";
        case MechanismKind::LogAbs: return "log_abs";
        case MechanismKind::Tanh: return "tanh";
        case MechanismKind::Sigmoid: return "sigmoid";
    }
    throw std::logic_error("to_string(MechanismKind): bad enum");
}

MechanismKind mechanism_kind_from_string(const std::string& s) {
    if (s == "linear") return MechanismKind::Linear;
    if (s == "polynomial") return MechanismKind::Polynomial;
    if (s == "exponential") return MechanismKind::Exponential;
    if (s == "sinusoid") return MechanismKind::Sinusoid;
    if (s == "multiplicative_pair") return MechanismKind::MultiplicativePair;
    if (s == "log_abs") return MechanismKind::LogAbs;
    if (s == "tanh") return MechanismKind::Tanh;
    if (s == "sigmoid") return MechanismKind::Sigmoid;
    throw std::invalid_argument("unknown mechanism kind: " + s);
}

std::string to_string(BoundedWrap w) {
    switch (w) {
        case BoundedWrap::None: return "none";
        case BoundedWrap::Tanh: return "tanh";
        case BoundedWrap::Sigmoid: return "sigmoid";
    }
    throw std::logic_error("to_string(BoundedWrap): bad enum");
}

BoundedWrap wrap_from_string(const std::string& s) {
    if (s == "none") return BoundedWrap::None;
    if (s == "tanh") return BoundedWrap::Tanh;
    if (s == "sigmoid") return BoundedWrap::Sigmoid;
    throw std::invalid_argument("unknown wrap: " + s);
}

bool is_unbounded_kind(MechanismKind k) {
    return k == MechanismKind::Polynomial || k == MechanismKind::Exponential ||
           k == MechanismKind::MultiplicativePair;
}

void Mechanism::validate(std::size_t num_parents) const {
    switch (kind) {
        case MechanismKind::Polynomial:
            if (coefficients.size() < 2)
                throw std::invalid_argument("Mechanism: polynomial degree must be >= 1");
            break;
        case MechanismKind::MultiplicativePair: {
            const std::size_t weighted =
                num_parents >= 2 ? num_parents - 2 : num_parents;
            if (coefficients.size() != weighted + 1)
                throw std::invalid_argument(
                    "Mechanism: multiplicative_pair coefficient count mismatch");
            break;
        }
        default:
            if (coefficients.size() != num_parents + 1)
                throw std::invalid_argument("Mechanism: coefficient count mismatch");
            break;
    }
}

double Mechanism::evaluate(const std::vector<double>& parents) const {
    double agg = 0.0;
    switch (kind) {
        case MechanismKind::Linear: {
            for (std::size_t k = 0; k < parents.size(); ++k)
                agg += coefficients[k] * parents[k];
            agg += coefficients[parents.size()];
            break;
        }
        case MechanismKind::Polynomial: {
            // coefficients = [alpha_n .. alpha_0], evaluated per parent.
            for (double x : parents) {
                double acc = 0.0;
                for (double c : coefficients) acc = acc * x + c;
                agg += acc;
            }
            break;
        }
        case MechanismKind::MultiplicativePair: {
            std::size_t k = 0;
            std::size_t c = 0;
            if (parents.size() >= 2) {
                agg += parents[0] * parents[1];
                k = 2;
            }
            for (; k < parents.size(); ++k) agg += coefficients[c++] * parents[k];
            agg += coefficients[c];
            break;
        }
        default: {
            for (std::size_t k = 0; k < parents.size(); ++k)
                agg += coefficients[k] * scalar_transform(kind, parents[k]);
            agg += coefficients[parents.size()];
            break;
        }
    }
    return apply_wrap(bounded_wrap, agg);
}

void NoiseSpec::validate() const {
    if (!(std > 0.0)) throw std::invalid_argument("NoiseSpec: std must be > 0");
}

void Tscm::validate() const {
    graph.validate();
    if (mechanisms.size() != static_cast<std::size_t>(graph.num_vars) ||
        noises.size() != static_cast<std::size_t>(graph.num_vars))
        throw std::invalid_argument("Tscm: one mechanism and noise per variable required");
    for (int j = 0; j < graph.num_vars; ++j) {
        mechanisms[j].validate(parents_of(graph, j).size());
        noises[j].validate();
    }
}

void MechanismPolicy::validate() const {
    if (enabled_kinds.empty())
        throw std::invalid_argument("MechanismPolicy: no enabled mechanism kinds");
    if (!(weight_min <= weight_max) || weight_min < 0.0)
        throw std::invalid_argument("MechanismPolicy: bad weight range");
    if (poly_degree_min < 1 || poly_degree_min > poly_degree_max)
        throw std::invalid_argument("MechanismPolicy: bad polynomial degree range");
    if (!(noise_std > 0.0))
        throw std::invalid_argument("MechanismPolicy: noise_std must be > 0");
}

void SimConfig::validate(int max_lag) const {
    if (num_steps < 1) throw std::invalid_argument("SimConfig: num_steps < 1");
    if (warmup < max_lag)
        throw std::invalid_argument("SimConfig: warmup must be >= max_lag");
    if (!(clamp_abs > 0.0)) throw std::invalid_argument("SimConfig: clamp_abs <= 0");
}

Tscm sample_tscm(const LaggedGraph& g, const MechanismPolicy& policy,
                 std::uint64_t seed) {
    g.validate();
    policy.validate();
    Rng rng(seed);
    Tscm m;
    m.graph = g;
    m.seed = seed;
    for (int j = 0; j < g.num_vars; ++j) {
        const std::size_t num_parents = parents_of(g, j).size();
        Mechanism mech;
        mech.kind = policy.enabled_kinds[rng.below(policy.enabled_kinds.size())];

        auto draw_weight = [&] {
            const double mag = rng.uniform(policy.weight_min, policy.weight_max);
            return rng.bernoulli(0.5) ? mag : -mag;
        };
        auto draw_intercept = [&] {
            return rng.uniform(policy.intercept_min, policy.intercept_max);
        };

        switch (mech.kind) {
            case MechanismKind::Polynomial: {
                const int degree =
                    rng.uniform_int(policy.poly_degree_min, policy.poly_degree_max);
                mech.coefficients.resize(degree + 1);
                for (auto& c : mech.coefficients)
                    c = rng.uniform(policy.poly_coeff_min, policy.poly_coeff_max);
                break;
            }
            case MechanismKind::MultiplicativePair: {
                const std::size_t weighted =
                    num_parents >= 2 ? num_parents - 2 : num_parents;
                for (std::size_t k = 0; k < weighted; ++k)
                    mech.coefficients.push_back(draw_weight());
                mech.coefficients.push_back(draw_intercept());
                break;
            }
            default: {
                for (std::size_t k = 0; k < num_parents; ++k)
                    mech.coefficients.push_back(draw_weight());
                mech.coefficients.push_back(draw_intercept());
                break;
            }
        }

        if (policy.wrap_unbounded && is_unbounded_kind(mech.kind))
            mech.bounded_wrap =
                rng.bernoulli(0.5) ? BoundedWrap::Tanh : BoundedWrap::Sigmoid;

        m.mechanisms.push_back(std::move(mech));
        m.noises.push_back(NoiseSpec{0.0, policy.noise_std});
    }
    m.validate();
    return m;
}

namespace {

struct SimResult {
    Eigen::MatrixXd series;
    bool nonfinite = false;
    bool overflow = false;
    double max_abs = 0.0;
};

// Shared recurrence for simulate() and stability_screen(). In clamp mode out-
// of-range values are clamped and flagged instead of aborting the run.
SimResult run_simulation(const Tscm& m, const SimConfig& sc, bool clamp_mode) {
    const int num_vars = m.graph.num_vars;
    const int max_lag = m.graph.max_lag;
    const int total = sc.warmup + max_lag + sc.num_steps;

    std::vector<std::vector<std::pair<int, int>>> parents(num_vars);
    for (int j = 0; j < num_vars; ++j) parents[j] = parents_of(m.graph, j);

    Rng rng(m.seed);
    Eigen::MatrixXd buf(total, num_vars);
    SimResult out;

    for (int t = 0; t < max_lag; ++t)
        for (int j = 0; j < num_vars; ++j) buf(t, j) = rng.normal();

    std::vector<double> parent_values;
    for (int t = max_lag; t < total; ++t) {
        for (int j = 0; j < num_vars; ++j) {
            parent_values.clear();
            for (const auto& [src, lag] : parents[j])
                parent_values.push_back(buf(t - lag, src));
            double v = m.mechanisms[j].evaluate(parent_values) +
                       rng.normal(m.noises[j].mean, m.noises[j].std);
            if (!std::isfinite(v)) {
                out.nonfinite = true;
                out.overflow = true;
                if (!clamp_mode)
                    throw std::runtime_error(
                        "simulate: non-finite value at step " + std::to_string(t));
                v = v > 0.0 ? sc.clamp_abs : -sc.clamp_abs;
            }
            if (std::abs(v) > sc.clamp_abs) {
                out.overflow = true;
                if (!clamp_mode)
                    throw std::runtime_error(
                        "simulate: value exceeded clamp bound at step " +
                        std::to_string(t));
                v = v > 0.0 ? sc.clamp_abs : -sc.clamp_abs;
            }
            out.max_abs = std::max(out.max_abs, std::abs(v));
            buf(t, j) = v;
        }
    }

    out.series = buf.bottomRows(sc.num_steps);
    return out;
}

}  // namespace

Eigen::MatrixXd simulate(const Tscm& m, const SimConfig& sc) {
    m.validate();
    sc.validate(m.graph.max_lag);
    return run_simulation(m, sc, /*clamp_mode=*/false).series;
}

StabilityReport stability_screen(const Tscm& m, const SimConfig& sc) {
    m.validate();
    sc.validate(m.graph.max_lag);
    const SimResult r = run_simulation(m, sc, /*clamp_mode=*/true);

    StabilityReport rep;
    rep.max_abs = r.max_abs;
    rep.nonfinite = r.nonfinite;
    rep.overflow = r.overflow;

    const int half = static_cast<int>(r.series.rows()) / 2;
    if (half < 2) return rep;
    const auto first = r.series.topRows(half);
    const auto second = r.series.bottomRows(half);

    double worst_var_ratio = 1.0;
    double worst_mean_drift = 0.0;
    for (int j = 0; j < r.series.cols(); ++j) {
        const double m1 = first.col(j).mean();
        const double m2 = second.col(j).mean();
        const double v1 =
            (first.col(j).array() - m1).square().sum() / (half - 1) + 1e-12;
        const double v2 =
            (second.col(j).array() - m2).square().sum() / (half - 1) + 1e-12;
        const double ratio = v2 / v1;
        if (std::abs(std::log(ratio)) > std::abs(std::log(worst_var_ratio)))
            worst_var_ratio = ratio;
        worst_mean_drift =
            std::max(worst_mean_drift, std::abs(m2 - m1) / std::sqrt(v1));
    }
    rep.var_drift_ratio = worst_var_ratio;
    rep.mean_drift_ratio = worst_mean_drift;
    return rep;
}

nlohmann::json tscm_to_json(const Tscm& m) {
    nlohmann::json mechs = nlohmann::json::array();
    for (const auto& mech : m.mechanisms)
        mechs.push_back({{"kind", to_string(mech.kind)},
                         {"coefficients", mech.coefficients},
                         {"wrap", to_string(mech.bounded_wrap)}});
    nlohmann::json noises = nlohmann::json::array();
    for (const auto& n : m.noises)
        noises.push_back({{"mean", n.mean}, {"std", n.std}});
    return nlohmann::json{{"graph", graph_to_json(m.graph)},
                          {"mechanisms", mechs},
                          {"noises", noises},
                          {"seed", m.seed}};
}

Tscm tscm_from_json(const nlohmann::json& j) {
    Tscm m;
    m.graph = graph_from_json(j.at("graph"));
    for (const auto& mj : j.at("mechanisms")) {
        Mechanism mech;
        mech.kind = mechanism_kind_from_string(mj.at("kind").get<std::string>());
        mech.coefficients = mj.at("coefficients").get<std::vector<double>>();
        mech.bounded_wrap = wrap_from_string(mj.at("wrap").get<std::string>());
        m.mechanisms.push_back(std::move(mech));
    }
    for (const auto& nj : j.at("noises"))
        m.noises.push_back(NoiseSpec{nj.at("mean").get<double>(),
                                     nj.at("std").get<double>()});
    m.seed = j.at("seed").get<std::uint64_t>();
    m.validate();
    return m;
}

}  // namespace tcd
