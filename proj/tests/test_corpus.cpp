#include "doctest.h"

#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tcd/container.hpp"
#include "tcd/corpus.hpp"
#include "tcd/rng.hpp"

using namespace tcd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tcd_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

SeriesInstance make_instance(int length, int num_vars, std::uint64_t seed) {
    SeriesInstance inst;
    Rng rng(seed);
    inst.series.resize(length, num_vars);
    for (int t = 0; t < length; ++t)
        for (int j = 0; j < num_vars; ++j) inst.series(t, j) = rng.normal();
    GraphConfig cfg;
    cfg.num_vars = num_vars;
    cfg.max_lag = 2;
    cfg.edge_density = 0.4;
    cfg.seed = seed;
    inst.graph = sample_er_graph(cfg);
    inst.id = "test";
    inst.provenance = nlohmann::json{{"source", "unit-test"}};
    return inst;
}

}  // namespace

TEST_CASE("minmax normalization maps ranges to [0, 1]") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 5, -2, 2, 5, 0, 3, 5, 2;
    const Eigen::MatrixXd n = minmax_normalize(m);

    CHECK(std::abs(n(0, 0) - 0.0) < 1e-7);
    CHECK(std::abs(n(1, 0) - 0.5) < 1e-7);
    CHECK(std::abs(n(2, 0) - 1.0) < 1e-7);

    // constant column collapses to zeros through the epsilon guard
    for (int t = 0; t < 3; ++t) CHECK(n(t, 1) == 0.0);

    CHECK(std::abs(n(0, 2) - 0.0) < 1e-7);
    CHECK(std::abs(n(1, 2) - 0.5) < 1e-7);
    CHECK(std::abs(n(2, 2) - 1.0) < 1e-7);
}

TEST_CASE("normalization is idempotent to epsilon scale") {
    const SeriesInstance inst = make_instance(200, 4, 5);
    const Eigen::MatrixXd once = minmax_normalize(inst.series);
    const Eigen::MatrixXd twice = minmax_normalize(once);
    CHECK((twice - once).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("padding adds noise columns and zero label padding") {
    const SeriesInstance inst = make_instance(500, 3, 9);
    const PaddedInstance p = pad_instance(inst, 500, 12, 3, 77);
    CHECK(p.series.rows() == 500);
    CHECK(p.series.cols() == 12);
    // label nonzero only in the top-left 3x3 block
    std::size_t ones_inside = 0;
    for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i)
            for (int s = 0; s < 3; ++s)
                if (p.label(j, i, s)) {
                    CHECK(j < 3);
                    CHECK(i < 3);
                    ++ones_inside;
                }
    CHECK(ones_inside == inst.graph.edge_count());
    // noise columns have small magnitude (N(0, 0.01))
    for (int j = 3; j < 12; ++j) {
        const double var =
            (p.series.col(j).array() - p.series.col(j).mean()).square().mean();
        CHECK(var < 0.05);
    }
}

TEST_CASE("identity padding and recency truncation") {
    const SeriesInstance inst = make_instance(500, 3, 10);
    const PaddedInstance same = pad_instance(inst, 500, 3, 2, 1);
    CHECK(same.series == inst.series);

    SeriesInstance longer = make_instance(700, 3, 12);
    const PaddedInstance truncated = pad_instance(longer, 500, 3, 2, 1);
    CHECK(truncated.series == longer.series.bottomRows(500));
}

TEST_CASE("pad rejects V > V_max") {
    const SeriesInstance inst = make_instance(100, 5, 2);
    CHECK_THROWS_AS(pad_instance(inst, 100, 4, 2, 0), std::runtime_error);
}

TEST_CASE("pad/unpad round trips losslessly; label count invariant") {
    Rng rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        const int length = 50 + static_cast<int>(rng.below(100));
        const int num_vars = 2 + static_cast<int>(rng.below(4));
        const SeriesInstance inst = make_instance(length, num_vars, rng.next_u64());
        const int l_max = length + static_cast<int>(rng.below(50));
        const int v_max = num_vars + static_cast<int>(rng.below(4));
        const PaddedInstance p = pad_instance(inst, l_max, v_max, 3, rng.next_u64());
        CHECK(unpad_series(p) == inst.series);
        std::size_t label_ones = 0;
        for (auto b : p.label.data()) label_ones += b;
        CHECK(label_ones == inst.graph.edge_count());
    }
}

TEST_CASE("instance container round trip is bit-identical") {
    const SeriesInstance inst = make_instance(120, 4, 33);
    const auto bytes = serialize_instance(inst);
    const SeriesInstance back = deserialize_instance(bytes);
    // payload is float32: round trip is bit-identical at payload precision
    CHECK(back.series.cast<float>() == inst.series.cast<float>());
    CHECK(graph_to_json(back.graph) == graph_to_json(inst.graph));
    CHECK(serialize_instance(back) == bytes);
}

TEST_CASE("malformed containers produce structured errors") {
    const SeriesInstance inst = make_instance(50, 3, 1);
    auto bytes = serialize_instance(inst);

    auto truncated = bytes;
    truncated.resize(10);
    CHECK_THROWS_WITH_AS(static_cast<void>(deserialize_instance(truncated)),
                         doctest::Contains("header"), std::runtime_error);

    auto corrupted = bytes;
    corrupted[30] ^= 0xff;
    CHECK_THROWS_WITH_AS(static_cast<void>(deserialize_instance(corrupted)),
                         doctest::Contains("hash"), std::runtime_error);

    // graph declares 4 variables, series has 3 columns
    SeriesInstance bad = inst;
    GraphConfig cfg;
    cfg.num_vars = 4;
    cfg.max_lag = 2;
    cfg.edge_density = 0.5;
    cfg.seed = 4;
    bad.graph = sample_er_graph(cfg);
    CHECK_THROWS_WITH_AS(static_cast<void>(serialize_instance(bad)),
                         doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("corpus build is deterministic and streams valid instances") {
    CorpusSpec spec;
    spec.count = 12;
    spec.vars_min = 3;
    spec.vars_max = 5;
    spec.density_min = 0.1;
    spec.density_max = 0.4;
    spec.num_steps = 120;
    spec.seed = 7;

    const fs::path dir_a = temp_dir("corpus_a");
    const fs::path dir_b = temp_dir("corpus_b");
    const CorpusManifest ma = build_corpus(spec, dir_a, 1);
    const CorpusManifest mb = build_corpus(spec, dir_b, 4);
    CHECK(ma.content_hash == mb.content_hash);
    CHECK(ma.count == 12);

    for (const auto& f : list_corpus_files(dir_a)) {
        const SeriesInstance inst = read_instance(f);
        CHECK(inst.series.rows() == 120);
        CHECK(inst.series.cols() >= 3);
        CHECK(inst.series.cols() <= 5);
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("empty corpus yields a valid manifest") {
    CorpusSpec spec;
    spec.count = 0;
    spec.seed = 1;
    const fs::path dir = temp_dir("corpus_empty");
    const CorpusManifest m = build_corpus(spec, dir, 1);
    CHECK(m.count == 0);
    CHECK(list_corpus_files(dir).empty());
    CHECK(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("mixture split is exact up to rounding") {
    // Build a small external pool first.
    const fs::path pool = temp_dir("corpus_pool");
    for (int k = 0; k < 5; ++k) {
        SeriesInstance inst = make_instance(100, 3, 1000 + k);
        inst.provenance = nlohmann::json{{"source", "external"}};
        write_instance(inst, pool / ("pool" + std::to_string(k) + ".tci"));
    }

    CorpusSpec spec;
    spec.count = 10;
    spec.num_steps = 100;
    spec.seed = 3;
    spec.mixture = {{"synthetic", 0.8}, {pool.string(), 0.2}};
    const fs::path dir = temp_dir("corpus_mix");
    build_corpus(spec, dir, 2);

    int synthetic = 0;
    int external = 0;
    for (const auto& f : list_corpus_files(dir)) {
        const SeriesInstance inst = read_instance(f);
        if (inst.provenance.at("source") == "synthetic")
            ++synthetic;
        else
            ++external;
    }
    CHECK(synthetic == 8);
    CHECK(external == 2);
    fs::remove_all(pool);
    fs::remove_all(dir);
}
