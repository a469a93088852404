#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tcd/rng.hpp"
#include "tcd/stats.hpp"
#include "tcd/tscm.hpp"

using namespace tcd;

namespace {

// The 3-variable linear chain used throughout:
//   X1_t = e1, X2_t = 3 X1_{t-1} + e2, X3_t = X2_{t-2} + 5 X1_{t-3} + e3.
Tscm linear_chain_model(std::uint64_t seed) {
    LaggedGraph g(3, 3);
    g.set_edge(0, 1, 1);
    g.set_edge(0, 2, 3);
    g.set_edge(1, 2, 2);

    Tscm m;
    m.graph = g;
    m.mechanisms = {
        Mechanism{MechanismKind::Linear, {0.0}, BoundedWrap::None},
        Mechanism{MechanismKind::Linear, {3.0, 0.0}, BoundedWrap::None},
        Mechanism{MechanismKind::Linear, {1.0, 5.0, 0.0}, BoundedWrap::None},
    };
    m.noises = {NoiseSpec{0.0, 1.0}, NoiseSpec{0.0, 1.0}, NoiseSpec{0.0, 1.0}};
    m.seed = seed;
    return m;
}

// OLS slope of y_t on x_{t-lag}.
double lagged_ols_slope(const Eigen::MatrixXd& series, int x, int y, int lag) {
    const int n = static_cast<int>(series.rows()) - lag;
    const auto xs = series.col(x).head(n);
    const auto ys = series.col(y).tail(n);
    const double mx = xs.mean();
    const double my = ys.mean();
    const double cov = ((xs.array() - mx) * (ys.array() - my)).sum();
    const double var = (xs.array() - mx).square().sum();
    return cov / var;
}

}  // namespace

TEST_CASE("linear chain: lagged regression recovers the structural slope") {
    const Tscm m = linear_chain_model(11);
    SimConfig sc;
    sc.num_steps = 500;
    const Eigen::MatrixXd series = simulate(m, sc);
    REQUIRE(series.rows() == 500);
    REQUIRE(series.cols() == 3);
    CHECK(series.allFinite());
    CHECK(std::abs(lagged_ols_slope(series, 0, 1, 1) - 3.0) < 0.15);
}

TEST_CASE("pure-noise roots behave like iid gaussians") {
    LaggedGraph g(4, 2);
    Tscm m;
    m.graph = g;
    for (int j = 0; j < 4; ++j) {
        m.mechanisms.push_back(
            Mechanism{MechanismKind::Linear, {0.0}, BoundedWrap::None});
        m.noises.push_back(NoiseSpec{0.0, 1.0});
    }
    m.seed = 21;
    SimConfig sc;
    sc.num_steps = 2000;
    const Eigen::MatrixXd series = simulate(m, sc);
    for (int j = 0; j < 4; ++j)
        CHECK(std::abs(series.col(j).mean()) < 4.0 / std::sqrt(2000.0));
}

TEST_CASE("tanh wrap bounds the pre-noise contribution") {
    // Strong positive feedback, but wrapped: noise-free check that the
    // mechanism output stays inside [-1, 1].
    Mechanism mech{MechanismKind::Exponential, {4.0, 0.0}, BoundedWrap::Tanh};
    for (double x : {-3.0, -0.5, 0.0, 1.0, 5.0, 40.0}) {
        const double v = mech.evaluate({x});
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("simulate throws on divergent unwrapped feedback") {
    // x -> e^x self loop with no wrap explodes quickly.
    LaggedGraph g(2, 1);
    g.set_edge(0, 0, 1);
    Tscm m;
    m.graph = g;
    m.mechanisms = {
        Mechanism{MechanismKind::Exponential, {3.0, 2.0}, BoundedWrap::None},
        Mechanism{MechanismKind::Linear, {0.0}, BoundedWrap::None},
    };
    m.noises = {NoiseSpec{0.0, 1.0}, NoiseSpec{0.0, 1.0}};
    m.seed = 5;
    SimConfig sc;
    sc.num_steps = 200;
    CHECK_THROWS_AS(simulate(m, sc), std::runtime_error);

    const StabilityReport rep = stability_screen(m, sc);
    CHECK(rep.overflow);
    CHECK_FALSE(rep.acceptable());
}

TEST_CASE("stability screen accepts mild linear dynamics") {
    Rng rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        GraphConfig cfg;
        cfg.num_vars = 4;
        cfg.max_lag = 2;
        cfg.edge_density = 0.3;
        cfg.seed = rng.next_u64();
        const LaggedGraph g = sample_er_graph(cfg);
        Tscm m;
        m.graph = g;
        for (int j = 0; j < 4; ++j) {
            const std::size_t num_parents = parents_of(g, j).size();
            Mechanism mech;
            mech.kind = MechanismKind::Linear;
            for (std::size_t k = 0; k < num_parents; ++k)
                mech.coefficients.push_back(rng.uniform(-0.5, 0.5));
            mech.coefficients.push_back(0.0);
            m.mechanisms.push_back(mech);
            m.noises.push_back(NoiseSpec{0.0, 1.0});
        }
        m.seed = rng.next_u64();
        SimConfig sc;
        sc.num_steps = 400;
        const StabilityReport r = stability_screen(m, sc);
        CHECK_FALSE(r.nonfinite);
        CHECK_FALSE(r.overflow);
        CHECK(r.var_drift_ratio >= 0.5);
        CHECK(r.var_drift_ratio <= 2.0);
    }
}

TEST_CASE("wrapped tscm never overflows") {
    LaggedGraph g(2, 1);
    g.set_edge(0, 0, 1);
    g.set_edge(0, 1, 1);
    Tscm m;
    m.graph = g;
    m.mechanisms = {
        Mechanism{MechanismKind::Exponential, {5.0, 0.0}, BoundedWrap::Tanh},
        Mechanism{MechanismKind::Polynomial, {1.0, 0.0, 0.0, 0.0}, BoundedWrap::Sigmoid},
    };
    m.noises = {NoiseSpec{0.0, 1.0}, NoiseSpec{0.0, 1.0}};
    m.seed = 77;
    SimConfig sc;
    sc.num_steps = 1000;
    const StabilityReport rep = stability_screen(m, sc);
    CHECK_FALSE(rep.overflow);
    CHECK_FALSE(rep.nonfinite);
}

TEST_CASE("sample_tscm is deterministic and respects the enabled kinds") {
    GraphConfig cfg;
    cfg.num_vars = 5;
    cfg.max_lag = 3;
    cfg.edge_density = 0.3;
    cfg.seed = 17;
    const LaggedGraph g = sample_er_graph(cfg);

    MechanismPolicy policy;
    policy.enabled_kinds = {MechanismKind::Linear, MechanismKind::Tanh};
    const Tscm a = sample_tscm(g, policy, 99);
    const Tscm b = sample_tscm(g, policy, 99);
    CHECK(tscm_to_json(a) == tscm_to_json(b));
    for (const auto& mech : a.mechanisms)
        CHECK((mech.kind == MechanismKind::Linear ||
               mech.kind == MechanismKind::Tanh));

    MechanismPolicy empty;
    empty.enabled_kinds.clear();
    CHECK_THROWS_AS(sample_tscm(g, empty, 1), std::invalid_argument);
}

TEST_CASE("isolated graph degenerates to pure noise mechanisms") {
    const LaggedGraph g(4, 2);
    MechanismPolicy policy;
    policy.enabled_kinds = {MechanismKind::Linear};
    policy.intercept_min = policy.intercept_max = 0.0;
    const Tscm m = sample_tscm(g, policy, 3);
    for (const auto& mech : m.mechanisms) {
        REQUIRE(mech.coefficients.size() == 1);
        CHECK(mech.coefficients[0] == 0.0);
    }
}

TEST_CASE("simulation is a pure function of the tscm") {
    const Tscm m = linear_chain_model(4242);
    SimConfig sc;
    sc.num_steps = 100;
    const Eigen::MatrixXd a = simulate(m, sc);
    const Eigen::MatrixXd b = simulate(m, sc);
    CHECK(a == b);

    // Output length is exactly T regardless of warmup.
    SimConfig sc2 = sc;
    sc2.warmup = 250;
    CHECK(simulate(m, sc2).rows() == 100);
}

TEST_CASE("tscm json round trip") {
    const Tscm m = linear_chain_model(8);
    const Tscm back = tscm_from_json(tscm_to_json(m));
    CHECK(tscm_to_json(back) == tscm_to_json(m));
    SimConfig sc;
    sc.num_steps = 50;
    CHECK(simulate(m, sc) == simulate(back, sc));
}

TEST_CASE("generator health: true edges carry strong lagged correlation") {
    // Linear mechanisms with |a| >= 1: the true (i, j, lag) cell should beat
    // the median absolute correlation over non-edges in almost all instances.
    Rng rng(2024);
    int healthy = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        GraphConfig cfg;
        cfg.num_vars = 3 + static_cast<int>(rng.below(3));
        cfg.max_lag = 2;
        cfg.edge_density = 0.15;
        cfg.allow_self_lagged = false;
        cfg.seed = rng.next_u64();
        const LaggedGraph g = sample_er_graph(cfg);
        if (g.edge_count() == 0) {
            ++healthy;  // vacuous
            continue;
        }
        MechanismPolicy policy;
        policy.enabled_kinds = {MechanismKind::Linear};
        policy.weight_min = 1.0;
        policy.weight_max = 1.5;
        const Tscm m = sample_tscm(g, policy, rng.next_u64());
        SimConfig sc;
        sc.num_steps = 400;
        const StabilityReport screen = stability_screen(m, sc);
        if (!screen.acceptable()) {
            ++healthy;  // unstable draws are rejected upstream, not scored
            continue;
        }
        const Eigen::MatrixXd series = simulate(m, sc);
        const CorrTensor cc =
            lagged_crosscorr(series, cfg.max_lag, cfg.num_vars);

        std::vector<double> non_edge;
        double min_edge = 1.0;
        for (int j = 0; j < cfg.num_vars; ++j)
            for (int i = 0; i < cfg.num_vars; ++i)
                for (int lag = 1; lag <= cfg.max_lag; ++lag) {
                    const double v =
                        std::abs(cc.values(j, i, cfg.max_lag - lag));
                    if (g.has_edge(i, j, lag))
                        min_edge = std::min(min_edge, v);
                    else
                        non_edge.push_back(v);
                }
        std::sort(non_edge.begin(), non_edge.end());
        const double median = non_edge[non_edge.size() / 2];
        if (min_edge > median) ++healthy;
    }
    CHECK(healthy >= static_cast<int>(0.95 * reps));
}
