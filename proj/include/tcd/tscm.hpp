#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "tcd/graph.hpp"

namespace tcd {

enum class MechanismKind {
    Linear,
    Polynomial,
    Exponential,
    Sinusoid,
    MultiplicativePair,
    LogAbs,
    Tanh,
    Sigmoid,
};

enum class BoundedWrap { None, Tanh, Sigmoid };

std::string to_string(MechanismKind k);
MechanismKind mechanism_kind_from_string(const std::string& s);
std::string to_string(BoundedWrap w);
BoundedWrap wrap_from_string(const std::string& s);

// True for kinds whose aggregate parent term is unbounded and therefore gets
// a bounded wrap by default (Linear kept unwrapped; stability is screened).
bool is_unbounded_kind(MechanismKind k);

// One structural equation f^j applied to the lagged parent values of a
// variable, in parents_of() order. Linear: sum a_k x_k + b with
// coefficients = [a_1..a_p, b]. Polynomial: shared coefficients
// [alpha_n..alpha_0] applied per parent, contributions summed.
// MultiplicativePair: x_1 * x_2 for the first two parents, remaining parents
// enter linearly via per-parent weights. Other kinds: sum a_k g(x_k) + b with
// g the kind's scalar transform. bounded_wrap squashes the aggregate term
// before noise is added, preserving the additive-noise form.
struct Mechanism {
    MechanismKind kind = MechanismKind::Linear;
    std::vector<double> coefficients;
    BoundedWrap bounded_wrap = BoundedWrap::None;

    double evaluate(const std::vector<double>& parent_values) const;
    void validate(std::size_t num_parents) const;
};

struct NoiseSpec {
    double mean = 0.0;
    double std = 1.0;  // must be > 0

    void validate() const;
};

// Graph + per-variable mechanisms + noise: the generative object.
struct Tscm {
    LaggedGraph graph;
    std::vector<Mechanism> mechanisms;  // one per variable
    std::vector<NoiseSpec> noises;      // one per variable
    std::uint64_t seed = 0;

    void validate() const;
};

// Which mechanism kinds may be drawn and from which coefficient ranges.
struct MechanismPolicy {
    std::vector<MechanismKind> enabled_kinds = {MechanismKind::Linear};
    double weight_min = 0.5;   // |a_k| range, sign uniform
    double weight_max = 2.0;
    double intercept_min = -0.5;
    double intercept_max = 0.5;
    int poly_degree_min = 2;
    int poly_degree_max = 3;
    double poly_coeff_min = -1.0;
    double poly_coeff_max = 1.0;
    double noise_std = 1.0;
    bool wrap_unbounded = true;

    void validate() const;
};

struct SimConfig {
    int num_steps = 500;    // T, returned rows
    int warmup = 100;       // W >= max_lag
    double clamp_abs = 1e6;

    void validate(int max_lag) const;
};

struct StabilityReport {
    double max_abs = 0.0;
    bool nonfinite = false;
    bool overflow = false;        // exceeded clamp_abs
    double mean_drift_ratio = 0.0;  // |second-half mean shift| vs first-half std
    double var_drift_ratio = 0.0;   // second-half variance / first-half variance
    bool acceptable(double var_lo = 0.2, double var_hi = 5.0) const {
        return !nonfinite && !overflow && var_drift_ratio >= var_lo &&
               var_drift_ratio <= var_hi;
    }
};

// Draw one mechanism per variable (kind uniform over enabled_kinds) plus a
// noise spec; deterministic given seed.
Tscm sample_tscm(const LaggedGraph& g, const MechanismPolicy& policy,
                 std::uint64_t seed);

// Ancestral sampling: first max_lag rows initialized with N(0,1), structural
// equations applied from there on, first warmup + max_lag rows discarded.
// Returns exactly num_steps rows. Throws if a non-finite or clamp-exceeding
// value appears (the instance is reported, not patched).
Eigen::MatrixXd simulate(const Tscm& m, const SimConfig& sc);

// Probe run used by the corpus builder to reject unstable instances.
// Never throws; divergence shows up as flags in the report.
StabilityReport stability_screen(const Tscm& m, const SimConfig& sc);

nlohmann::json tscm_to_json(const Tscm& m);
Tscm tscm_from_json(const nlohmann::json& j);

}  // namespace tcd
