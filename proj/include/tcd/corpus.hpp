#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "tcd/graph.hpp"
#include "tcd/tscm.hpp"

namespace tcd {

// One (time series, ground-truth graph) supervised pair.
struct SeriesInstance {
    Eigen::MatrixXd series;  // L x V
    LaggedGraph graph;
    std::string id;
    nlohmann::json provenance;  // tscm json or external tag

    void validate() const;
};

struct PaddedInstance {
    Eigen::MatrixXd series;            // L_max x V_max
    BinaryTensor label;                // V_max x V_max x max_lag
    std::vector<std::uint8_t> mask;    // 1 for real (non-padded) variables
    int orig_length = 0;
    int orig_vars = 0;
};

struct MixtureComponent {
    std::string source;  // "synthetic" or a directory of instance files
    double proportion = 1.0;
};

struct CorpusSpec {
    int count = 0;
    int vars_min = 3;
    int vars_max = 5;
    double density_min = 0.1;
    double density_max = 0.4;
    int num_steps = 500;
    int max_lag = 3;
    int min_lag = 1;
    bool allow_self_lagged = true;
    int warmup = 100;
    bool normalize = true;
    MechanismPolicy policy;
    std::vector<MixtureComponent> mixture = {{"synthetic", 1.0}};
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static CorpusSpec from_json(const nlohmann::json& j);
};

struct CorpusManifest {
    int count = 0;
    int rejections = 0;
    std::uint64_t content_hash = 0;
    std::vector<std::string> files;
    nlohmann::json spec;

    nlohmann::json to_json() const;
};

// Per-variable min-max scaling: (x - min) / (max - min + 1e-8). Constant
// columns map to zeros.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& series);

// Gaussian N(0, 0.01) padding on missing rows/columns, zero padding on the
// label, truncation keeps the most recent rows. Throws if V > v_max: columns
// cannot be dropped without corrupting the ground-truth label.
PaddedInstance pad_instance(const SeriesInstance& inst, int l_max, int v_max,
                            int max_lag, std::uint64_t seed);

// Inverse of padding on the series block (valid when orig fits the budget).
Eigen::MatrixXd unpad_series(const PaddedInstance& padded);

// Instance container IO (.tci): 16-byte header (magic, version, meta length),
// JSON metadata, row-major float32 LE payload, trailing FNV-1a hash.
void write_instance(const SeriesInstance& inst, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_instance(const SeriesInstance& inst);
SeriesInstance read_instance(const std::filesystem::path& path);
SeriesInstance deserialize_instance(const std::vector<std::uint8_t>& bytes);

// Generate `spec.count` instances into out_dir (manifest.json + NNNNNNN.tci).
// Unstable draws are regenerated with a fresh derived seed and counted.
// Output is a pure function of spec, independent of the worker count.
CorpusManifest build_corpus(const CorpusSpec& spec,
                            const std::filesystem::path& out_dir, int jobs = 1);

std::vector<std::filesystem::path> list_corpus_files(
    const std::filesystem::path& dir);

}  // namespace tcd
