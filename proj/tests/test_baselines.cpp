#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "tcd/baselines.hpp"
#include "tcd/rng.hpp"
#include "tcd/stats.hpp"
#include "tcd/tscm.hpp"

using namespace tcd;

namespace {

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

SeriesInstance chain_instance(std::uint64_t seed, int num_steps = 500) {
    const Tscm m = linear_chain_model(seed);
    SimConfig sc;
    sc.num_steps = num_steps;
    SeriesInstance inst;
    inst.series = simulate(m, sc);
    inst.graph = m.graph;
    inst.id = "chain";
    return inst;
}

SeriesInstance noise_instance(std::uint64_t seed, int num_vars, int num_steps) {
    SeriesInstance inst;
    Rng rng(seed);
    inst.series.resize(num_steps, num_vars);
    for (int t = 0; t < num_steps; ++t)
        for (int j = 0; j < num_vars; ++j) inst.series(t, j) = rng.normal();
    GraphConfig cfg;
    cfg.num_vars = num_vars;
    cfg.max_lag = 3;
    cfg.edge_density = 0.3;
    cfg.seed = seed;
    inst.graph = sample_er_graph(cfg);  // arbitrary truth: data is pure noise
    inst.id = "noise";
    return inst;
}

}  // namespace

TEST_CASE("corr scorer ranks the chain's true edges on top") {
    const SeriesInstance inst = chain_instance(42);
    const ScoreTensor scores = corr_scorer(inst, 3);
    const BinaryTensor mask = make_eval_mask(3, 3, 3, 3);
    CHECK(auc(scores.values, inst.graph, mask) >= 0.99);
}

TEST_CASE("exact copy chain gives AUC 1") {
    Rng rng(1);
    SeriesInstance inst;
    inst.series.resize(300, 2);
    for (int t = 0; t < 300; ++t) inst.series(t, 0) = rng.normal();
    for (int t = 0; t < 300; ++t)
        inst.series(t, 1) = t >= 1 ? inst.series(t - 1, 0) : rng.normal();
    inst.graph = LaggedGraph(2, 2);
    inst.graph.set_edge(0, 1, 1);
    inst.id = "copy";
    const ScoreTensor scores = corr_scorer(inst, 2);
    const BinaryTensor mask = make_eval_mask(2, 2, 2, 2);
    CHECK(auc(scores.values, inst.graph, mask) == doctest::Approx(1.0));
}

TEST_CASE("corr scorer on pure noise hovers around chance") {
    double total = 0.0;
    int n = 0;
    const BinaryTensor mask = make_eval_mask(4, 3, 4, 3);
    for (int rep = 0; rep < 100; ++rep) {
        const SeriesInstance inst = noise_instance(9000 + rep, 4, 300);
        if (inst.graph.edge_count() == 0 ||
            inst.graph.edge_count() == inst.graph.adj.size())
            continue;
        total += auc(corr_scorer(inst, 3).values, inst.graph, mask);
        ++n;
    }
    const double mean = total / n;
    CHECK(mean >= 0.4);
    CHECK(mean <= 0.6);
}

TEST_CASE("corr scorer is invariant to positive affine rescaling") {
    const SeriesInstance inst = chain_instance(5);
    SeriesInstance scaled = inst;
    scaled.series.col(0) = 4.0 * inst.series.col(0).array() + 10.0;
    scaled.series.col(2) = 0.2 * inst.series.col(2).array() - 3.0;
    const ScoreTensor a = corr_scorer(inst, 3);
    const ScoreTensor b = corr_scorer(scaled, 3);
    for (std::size_t k = 0; k < a.values.size(); ++k)
        CHECK(std::abs(a.values.data()[k] - b.values.data()[k]) < 1e-9);
}

TEST_CASE("var granger recovers the linear chain exactly") {
    const SeriesInstance inst = chain_instance(7);
    const ScoreTensor scores = var_granger_scorer(inst, 3);
    const BinaryTensor mask = make_eval_mask(3, 3, 3, 3);
    CHECK(auc(scores.values, inst.graph, mask) == doctest::Approx(1.0));
}

TEST_CASE("var granger on pure noise hovers around chance") {
    double total = 0.0;
    int n = 0;
    const BinaryTensor mask = make_eval_mask(4, 3, 4, 3);
    for (int rep = 0; rep < 100; ++rep) {
        const SeriesInstance inst = noise_instance(7000 + rep, 4, 300);
        if (inst.graph.edge_count() == 0 ||
            inst.graph.edge_count() == inst.graph.adj.size())
            continue;
        total += auc(var_granger_scorer(inst, 3).values, inst.graph, mask);
        ++n;
    }
    const double mean = total / n;
    CHECK(mean >= 0.4);
    CHECK(mean <= 0.6);
}

TEST_CASE("perfect lag-1 regressor carries the global max t-statistic") {
    Rng rng(12);
    SeriesInstance inst;
    inst.series.resize(400, 3);
    for (int t = 0; t < 400; ++t) {
        inst.series(t, 0) = rng.normal();
        inst.series(t, 2) = rng.normal();
    }
    for (int t = 0; t < 400; ++t)
        inst.series(t, 1) = t >= 1 ? inst.series(t - 1, 0) : rng.normal();
    inst.graph = LaggedGraph(3, 2);
    inst.graph.set_edge(0, 1, 1);
    inst.id = "perfect";

    const ScoreTensor scores = var_granger_scorer(inst, 2);
    const double target = scores.values(1, 0, 1);  // slice for lag 1
    for (double v : scores.values.data()) CHECK(v <= target);
}

TEST_CASE("var granger rejects too-short series") {
    const SeriesInstance inst = noise_instance(3, 5, 20);
    CHECK_THROWS_AS(var_granger_scorer(inst, 3), std::invalid_argument);
}

TEST_CASE("var granger consistency over a seeded batch") {
    // Linear VAR data with |coefficients| >= 1: AUC >= 0.95 in >= 90% of
    // 100 instances (V <= 5, density <= 0.3).
    Rng rng(321);
    int good = 0;
    int n = 0;
    for (int rep = 0; rep < 2000 && n < 100; ++rep) {
        GraphConfig cfg;
        cfg.num_vars = 3 + static_cast<int>(rng.below(3));
        cfg.max_lag = 3;
        cfg.edge_density = 0.15;
        cfg.allow_self_lagged = false;
        cfg.seed = rng.next_u64();
        const LaggedGraph g = sample_er_graph(cfg);
        if (g.edge_count() == 0) continue;

        MechanismPolicy policy;
        policy.enabled_kinds = {MechanismKind::Linear};
        policy.weight_min = 1.0;
        policy.weight_max = 1.5;
        const Tscm m = sample_tscm(g, policy, rng.next_u64());
        SimConfig sc;
        sc.num_steps = 500;
        if (!stability_screen(m, sc).acceptable()) continue;

        SeriesInstance inst;
        inst.series = simulate(m, sc);
        inst.graph = g;
        inst.id = "batch";
        const BinaryTensor mask =
            make_eval_mask(cfg.num_vars, 3, cfg.num_vars, 3);
        ++n;
        if (auc(var_granger_scorer(inst, 3).values, g, mask) >= 0.95) ++good;
    }
    REQUIRE(n >= 50);
    CHECK(good >= static_cast<int>(0.9 * n));
}

TEST_CASE("bootstrap probability semantics") {
    const SeriesInstance inst = chain_instance(77, 300);
    auto scorer = [](const SeriesInstance& in) { return corr_scorer(in, 3); };

    BootstrapConfig cfg;
    cfg.n = 10;
    cfg.block_len = 25;
    cfg.seed = 5;
    const ScoreTensor probs = bootstrap_probabilities(inst, scorer, cfg, 3);
    CHECK(probs.kind == ScoreKind::Probability);
    for (double v : probs.values.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        // every entry is a multiple of 1/n
        CHECK(std::abs(v * 10.0 - std::round(v * 10.0)) < 1e-9);
    }

    SUBCASE("n=1 is a single binarized run") {
        cfg.n = 1;
        const ScoreTensor one = bootstrap_probabilities(inst, scorer, cfg, 3);
        for (double v : one.values.data()) CHECK((v == 0.0 || v == 1.0));
    }

    SUBCASE("block_len = L makes every resample the original") {
        cfg.n = 7;
        cfg.block_len = static_cast<int>(inst.series.rows());
        const ScoreTensor fixed = bootstrap_probabilities(inst, scorer, cfg, 3);
        for (double v : fixed.values.data()) CHECK((v == 0.0 || v == 1.0));
    }
}

TEST_CASE("bootstrap aborts when the scorer fails on most resamples") {
    const SeriesInstance inst = chain_instance(11, 200);
    int calls = 0;
    auto flaky = [&calls](const SeriesInstance& in) -> ScoreTensor {
        if (++calls % 2 == 0) throw std::runtime_error("synthetic failure");
        return corr_scorer(in, 3);
    };
    BootstrapConfig cfg;
    cfg.n = 10;
    cfg.seed = 2;
    CHECK_THROWS_AS(bootstrap_probabilities(inst, flaky, cfg, 3),
                    std::runtime_error);
}

TEST_CASE("score container round trip") {
    const SeriesInstance inst = chain_instance(13, 200);
    const ScoreTensor scores = var_granger_scorer(inst, 3);
    const auto path =
        std::filesystem::temp_directory_path() / "tcd_test_scores.tcs";
    write_scores(scores, path);
    const ScoreTensor back = read_scores(path);
    CHECK(back.kind == scores.kind);
    REQUIRE(back.values.size() == scores.values.size());
    for (std::size_t k = 0; k < back.values.size(); ++k)
        CHECK(back.values.data()[k] ==
              doctest::Approx(scores.values.data()[k]).epsilon(1e-6));
    std::filesystem::remove(path);
}
