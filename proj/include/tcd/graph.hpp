#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tcd/tensor.hpp"

#include <nlohmann/json_fwd.hpp>

namespace tcd {

// Lagged causal graph over time-indexed variables. adj(j, i, s) = 1 with
// s = max_lag - lag encodes the edge X^i_{t-lag} -> X^j_t. Only strictly
// lagged edges exist (lag >= 1), so the unrolled graph is acyclic.
struct LaggedGraph {
    int num_vars = 0;
    int max_lag = 1;
    BinaryTensor adj;

    LaggedGraph() = default;
    LaggedGraph(int num_vars, int max_lag);

    int lag_to_slice(int lag) const { return max_lag - lag; }
    int slice_to_lag(int slice) const { return max_lag - slice; }

    bool has_edge(int src, int dst, int lag) const {
        return adj(dst, src, lag_to_slice(lag)) != 0;
    }
    void set_edge(int src, int dst, int lag, bool present = true) {
        adj.at(dst, src, lag_to_slice(lag)) = present ? 1 : 0;
    }

    std::size_t edge_count() const;
    void validate() const;
};

struct GraphConfig {
    int num_vars = 3;
    int max_lag = 1;
    double edge_density = 0.2;          // inclusion probability, in (0, 1]
    bool allow_self_lagged = true;
    int min_lag = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Erdos-Renyi sampling over admissible (src, dst, lag) triples: each triple
// with min_lag <= lag <= max_lag enters independently with probability
// edge_density. Deterministic given cfg.seed. Isolated nodes are permitted.
LaggedGraph sample_er_graph(const GraphConfig& cfg);

// Lag-collapsed summary: entry (j, i) = 1 iff an edge i -> j exists at any lag.
std::vector<std::vector<std::uint8_t>> summary_graph(const LaggedGraph& g);

// All (source, lag) pairs feeding variable j, sorted by (lag, source).
std::vector<std::pair<int, int>> parents_of(const LaggedGraph& g, int j);

// JSON form: {num_vars, max_lag, edges: [[i, j, lag], ...]} with edges sorted
// by (j, i, lag).
nlohmann::json graph_to_json(const LaggedGraph& g);
LaggedGraph graph_from_json(const nlohmann::json& j);

}  // namespace tcd
