#include "tcd/graph.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tcd/rng.hpp"

namespace tcd {

LaggedGraph::LaggedGraph(int num_vars_, int max_lag_)
    : num_vars(num_vars_), max_lag(max_lag_), adj(num_vars_, max_lag_) {
    if (num_vars < 1) throw std::invalid_argument("LaggedGraph: num_vars < 1");
    if (max_lag < 1) throw std::invalid_argument("LaggedGraph: max_lag < 1");
}

std::size_t LaggedGraph::edge_count() const {
    std::size_t n = 0;
    for (auto b : adj.data()) n += b;
    return n;
}

void LaggedGraph::validate() const {
    if (num_vars < 1) throw std::invalid_argument("LaggedGraph: num_vars < 1");
    if (max_lag < 1) throw std::invalid_argument("LaggedGraph: max_lag < 1");
    if (adj.num_vars() != num_vars || adj.num_slices() != max_lag)
        throw std::invalid_argument("LaggedGraph: adjacency shape mismatch");
    for (auto b : adj.data())
        if (b > 1) throw std::invalid_argument("LaggedGraph: non-binary adjacency entry");
}

void GraphConfig::validate() const {
    if (num_vars < 2) throw std::invalid_argument("GraphConfig: num_vars < 2");
    if (!(edge_density > 0.0 && edge_density <= 1.0))
        throw std::invalid_argument("GraphConfig: edge_density not in (0, 1]");
    if (min_lag < 1) throw std::invalid_argument("GraphConfig: min_lag < 1");
    if (min_lag > max_lag) throw std::invalid_argument("GraphConfig: min_lag > max_lag");
}

LaggedGraph sample_er_graph(const GraphConfig& cfg) {
    cfg.validate();
    LaggedGraph g(cfg.num_vars, cfg.max_lag);
    Rng rng(cfg.seed);
    for (int dst = 0; dst < cfg.num_vars; ++dst) {
        for (int src = 0; src < cfg.num_vars; ++src) {
            if (src == dst && !cfg.allow_self_lagged) continue;
            for (int lag = cfg.min_lag; lag <= cfg.max_lag; ++lag) {
                if (rng.bernoulli(cfg.edge_density)) g.set_edge(src, dst, lag);
            }
        }
    }
    return g;
}

std::vector<std::vector<std::uint8_t>> summary_graph(const LaggedGraph& g) {
    std::vector<std::vector<std::uint8_t>> s(
        g.num_vars, std::vector<std::uint8_t>(g.num_vars, 0));
    for (int j = 0; j < g.num_vars; ++j)
        for (int i = 0; i < g.num_vars; ++i)
            for (int slice = 0; slice < g.max_lag; ++slice)
                if (g.adj(j, i, slice)) s[j][i] = 1;
    return s;
}

std::vector<std::pair<int, int>> parents_of(const LaggedGraph& g, int j) {
    if (j < 0 || j >= g.num_vars)
        throw std::out_of_range("parents_of: variable index out of range");
    std::vector<std::pair<int, int>> parents;  // (source, lag)
    for (int lag = 1; lag <= g.max_lag; ++lag)
        for (int i = 0; i < g.num_vars; ++i)
            if (g.has_edge(i, j, lag)) parents.emplace_back(i, lag);
    std::sort(parents.begin(), parents.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    return parents;
}

nlohmann::json graph_to_json(const LaggedGraph& g) {
    std::vector<std::array<int, 3>> edges;
    for (int j = 0; j < g.num_vars; ++j)
        for (int i = 0; i < g.num_vars; ++i)
            for (int lag = 1; lag <= g.max_lag; ++lag)
                if (g.has_edge(i, j, lag)) edges.push_back({i, j, lag});
    std::sort(edges.begin(), edges.end(),
              [](const auto& a, const auto& b) {
                  if (a[1] != b[1]) return a[1] < b[1];
                  if (a[0] != b[0]) return a[0] < b[0];
                  return a[2] < b[2];
              });
    return nlohmann::json{
        {"num_vars", g.num_vars}, {"max_lag", g.max_lag}, {"edges", edges}};
}

LaggedGraph graph_from_json(const nlohmann::json& j) {
    LaggedGraph g(j.at("num_vars").get<int>(), j.at("max_lag").get<int>());
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 3)
            throw std::invalid_argument("graph_from_json: malformed edge entry");
        const int src = e[0].get<int>();
        const int dst = e[1].get<int>();
        const int lag = e[2].get<int>();
        if (src < 0 || src >= g.num_vars || dst < 0 || dst >= g.num_vars ||
            lag < 1 || lag > g.max_lag)
            throw std::invalid_argument("graph_from_json: edge out of range");
        g.set_edge(src, dst, lag);
    }
    g.validate();
    return g;
}

}  // namespace tcd
