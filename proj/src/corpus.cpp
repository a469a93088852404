#include "tcd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tcd/container.hpp"
#include "tcd/rng.hpp"

namespace tcd {

namespace {

constexpr char kInstanceMagic[4] = {'T', 'C', 'D', 'I'};
// Dense mixed-mechanism specs can reject >99% of draws (unwrapped linear
// systems with large weights are usually explosive), so the cap is generous;
// every rejection is still counted in the manifest.
constexpr int kMaxRegenerateAttempts = 5000;

std::string instance_filename(int index) {
    std::ostringstream os;
    os.width(7);
    os.fill('0');
    os << index;
    return os.str() + ".tci";
}

}  // namespace

void SeriesInstance::validate() const {
    graph.validate();
    if (series.cols() != graph.num_vars)
        throw std::runtime_error(
            "SeriesInstance: series/graph dimension mismatch (V=" +
            std::to_string(graph.num_vars) + ", columns=" +
            std::to_string(series.cols()) + ")");
    if (!series.allFinite())
        throw std::runtime_error("SeriesInstance: non-finite series values");
}

void CorpusSpec::validate() const {
    if (count < 0) throw std::invalid_argument("CorpusSpec: count < 0");
    if (vars_min < 2 || vars_min > vars_max)
        throw std::invalid_argument("CorpusSpec: bad variable range");
    if (!(density_min > 0.0 && density_min <= density_max && density_max <= 1.0))
        throw std::invalid_argument("CorpusSpec: bad density range");
    if (num_steps < 1) throw std::invalid_argument("CorpusSpec: num_steps < 1");
    if (min_lag < 1 || min_lag > max_lag)
        throw std::invalid_argument("CorpusSpec: bad lag range");
    if (warmup < max_lag)
        throw std::invalid_argument("CorpusSpec: warmup < max_lag");
    policy.validate();
    if (mixture.empty())
        throw std::invalid_argument("CorpusSpec: empty mixture");
    double sum = 0.0;
    for (const auto& c : mixture) {
        if (c.proportion < 0.0 || c.proportion > 1.0)
            throw std::invalid_argument("CorpusSpec: proportion outside [0, 1]");
        sum += c.proportion;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("CorpusSpec: mixture proportions must sum to 1");
}

nlohmann::json CorpusSpec::to_json() const {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : policy.enabled_kinds) kinds.push_back(to_string(k));
    nlohmann::json mix = nlohmann::json::array();
    for (const auto& c : mixture)
        mix.push_back({{"source", c.source}, {"proportion", c.proportion}});
    return nlohmann::json{
        {"count", count},
        {"vars_min", vars_min},
        {"vars_max", vars_max},
        {"density_min", density_min},
        {"density_max", density_max},
        {"num_steps", num_steps},
        {"max_lag", max_lag},
        {"min_lag", min_lag},
        {"allow_self_lagged", allow_self_lagged},
        {"warmup", warmup},
        {"normalize", normalize},
        {"policy",
         {{"enabled_kinds", kinds},
          {"weight_min", policy.weight_min},
          {"weight_max", policy.weight_max},
          {"intercept_min", policy.intercept_min},
          {"intercept_max", policy.intercept_max},
          {"poly_degree_min", policy.poly_degree_min},
          {"poly_degree_max", policy.poly_degree_max},
          {"poly_coeff_min", policy.poly_coeff_min},
          {"poly_coeff_max", policy.poly_coeff_max},
          {"noise_std", policy.noise_std},
          {"wrap_unbounded", policy.wrap_unbounded}}},
        {"mixture", mix},
        {"seed", seed}};
}

CorpusSpec CorpusSpec::from_json(const nlohmann::json& j) {
    CorpusSpec s;
    s.count = j.at("count").get<int>();
    s.vars_min = j.at("vars_min").get<int>();
    s.vars_max = j.at("vars_max").get<int>();
    s.density_min = j.at("density_min").get<double>();
    s.density_max = j.at("density_max").get<double>();
    s.num_steps = j.at("num_steps").get<int>();
    s.max_lag = j.at("max_lag").get<int>();
    s.min_lag = j.value("min_lag", 1);
    s.allow_self_lagged = j.value("allow_self_lagged", true);
    s.warmup = j.value("warmup", 100);
    s.normalize = j.value("normalize", true);
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        s.policy.enabled_kinds.clear();
        for (const auto& k : p.at("enabled_kinds"))
            s.policy.enabled_kinds.push_back(
                mechanism_kind_from_string(k.get<std::string>()));
        s.policy.weight_min = p.value("weight_min", 0.5);
        s.policy.weight_max = p.value("weight_max", 2.0);
        s.policy.intercept_min = p.value("intercept_min", -0.5);
        s.policy.intercept_max = p.value("intercept_max", 0.5);
        s.policy.poly_degree_min = p.value("poly_degree_min", 2);
        s.policy.poly_degree_max = p.value("poly_degree_max", 3);
        s.policy.poly_coeff_min = p.value("poly_coeff_min", -1.0);
        s.policy.poly_coeff_max = p.value("poly_coeff_max", 1.0);
        s.policy.noise_std = p.value("noise_std", 1.0);
        s.policy.wrap_unbounded = p.value("wrap_unbounded", true);
    }
    if (j.contains("mixture")) {
        s.mixture.clear();
        for (const auto& c : j.at("mixture"))
            s.mixture.push_back({c.at("source").get<std::string>(),
                                 c.at("proportion").get<double>()});
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

nlohmann::json CorpusManifest::to_json() const {
    return nlohmann::json{{"count", count},
                          {"rejections", rejections},
                          {"content_hash", content_hash},
                          {"files", files},
                          {"spec", spec}};
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& series) {
    constexpr double kEps = 1e-8;
    Eigen::MatrixXd out = series;
    for (int j = 0; j < out.cols(); ++j) {
        const double lo = out.col(j).minCoeff();
        const double hi = out.col(j).maxCoeff();
        out.col(j) = (out.col(j).array() - lo) / (hi - lo + kEps);
    }
    return out;
}

PaddedInstance pad_instance(const SeriesInstance& inst, int l_max, int v_max,
                            int max_lag, std::uint64_t seed) {
    inst.validate();
    const int length = static_cast<int>(inst.series.rows());
    const int num_vars = static_cast<int>(inst.series.cols());
    if (num_vars > v_max)
        throw std::runtime_error(
            "pad_instance: instance has more variables than v_max; rejecting "
            "(column truncation would corrupt the ground-truth label)");
    if (inst.graph.max_lag > max_lag)
        throw std::runtime_error("pad_instance: graph max_lag exceeds budget");

    PaddedInstance out;
    out.orig_length = length;
    out.orig_vars = num_vars;
    out.series = Eigen::MatrixXd::Zero(l_max, v_max);

    const int kept = std::min(length, l_max);
    // Truncation keeps the most recent rows.
    out.series.block(0, 0, kept, num_vars) =
        inst.series.bottomRows(kept);

    Rng rng(seed);
    const double pad_std = 0.1;  // N(0, 0.01)
    for (int t = kept; t < l_max; ++t)
        for (int j = 0; j < num_vars; ++j)
            out.series(t, j) = rng.normal(0.0, pad_std);
    for (int j = num_vars; j < v_max; ++j)
        for (int t = 0; t < l_max; ++t)
            out.series(t, j) = rng.normal(0.0, pad_std);

    out.label = BinaryTensor(v_max, max_lag, 0);
    for (int j = 0; j < num_vars; ++j)
        for (int i = 0; i < num_vars; ++i)
            for (int lag = 1; lag <= inst.graph.max_lag; ++lag)
                if (inst.graph.has_edge(i, j, lag))
                    out.label(j, i, max_lag - lag) = 1;

    out.mask.assign(v_max, 0);
    for (int j = 0; j < num_vars; ++j) out.mask[j] = 1;
    return out;
}

Eigen::MatrixXd unpad_series(const PaddedInstance& padded) {
    const int rows = std::min(padded.orig_length,
                              static_cast<int>(padded.series.rows()));
    return padded.series.block(0, 0, rows, padded.orig_vars);
}

std::vector<std::uint8_t> serialize_instance(const SeriesInstance& inst) {
    inst.validate();
    Container c;
    std::copy(kInstanceMagic, kInstanceMagic + 4, c.magic.begin());
    c.meta = nlohmann::json{{"id", inst.id},
                            {"num_steps", inst.series.rows()},
                            {"num_vars", inst.series.cols()},
                            {"graph", graph_to_json(inst.graph)},
                            {"provenance", inst.provenance}};
    std::vector<float> payload;
    payload.reserve(static_cast<std::size_t>(inst.series.size()));
    for (int t = 0; t < inst.series.rows(); ++t)
        for (int j = 0; j < inst.series.cols(); ++j)
            payload.push_back(static_cast<float>(inst.series(t, j)));
    c.payload = pack_f32(payload);
    return container_serialize(c);
}

void write_instance(const SeriesInstance& inst,
                    const std::filesystem::path& path) {
    write_bytes(path, serialize_instance(inst));
}

SeriesInstance deserialize_instance(const std::vector<std::uint8_t>& bytes) {
    const Container c = container_deserialize(bytes, kInstanceMagic);
    SeriesInstance inst;
    inst.id = c.meta.at("id").get<std::string>();
    inst.graph = graph_from_json(c.meta.at("graph"));
    inst.provenance = c.meta.value("provenance", nlohmann::json());
    const int length = c.meta.at("num_steps").get<int>();
    const int num_vars = c.meta.at("num_vars").get<int>();
    const std::vector<float> payload = unpack_f32(c.payload);
    if (payload.size() != static_cast<std::size_t>(length) * num_vars)
        throw std::runtime_error("instance: payload size mismatch");
    inst.series.resize(length, num_vars);
    for (int t = 0; t < length; ++t)
        for (int j = 0; j < num_vars; ++j)
            inst.series(t, j) = payload[static_cast<std::size_t>(t) * num_vars + j];
    inst.validate();
    return inst;
}

SeriesInstance read_instance(const std::filesystem::path& path) {
    return deserialize_instance(read_bytes(path));
}

std::vector<std::filesystem::path> list_corpus_files(
    const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".tci") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

namespace {

// Per-index source assignment via largest-deficit scheduling, so every prefix
// of the stream tracks the requested proportions and counts are exact up to
// rounding.
std::vector<int> mixture_schedule(const CorpusSpec& spec) {
    const int m = static_cast<int>(spec.mixture.size());
    std::vector<double> credit(m, 0.0);
    std::vector<int> schedule(spec.count);
    for (int idx = 0; idx < spec.count; ++idx) {
        int best = 0;
        for (int s = 0; s < m; ++s) {
            credit[s] += spec.mixture[s].proportion;
            if (credit[s] > credit[best] + 1e-12) best = s;
        }
        credit[best] -= 1.0;
        schedule[idx] = best;
    }
    return schedule;
}

struct GeneratedInstance {
    std::vector<std::uint8_t> bytes;
    int rejections = 0;
};

GeneratedInstance generate_synthetic(const CorpusSpec& spec, int index) {
    const std::uint64_t instance_seed = derive_seed(spec.seed, index);
    GeneratedInstance out;
    for (int attempt = 0; attempt < kMaxRegenerateAttempts; ++attempt) {
        const std::uint64_t attempt_seed = derive_seed(instance_seed, attempt);
        Rng rng(attempt_seed);

        GraphConfig gc;
        gc.num_vars = rng.uniform_int(spec.vars_min, spec.vars_max);
        gc.max_lag = spec.max_lag;
        gc.min_lag = spec.min_lag;
        gc.allow_self_lagged = spec.allow_self_lagged;
        gc.edge_density = rng.uniform(spec.density_min, spec.density_max);
        gc.seed = derive_seed(attempt_seed, 1);

        const LaggedGraph g = sample_er_graph(gc);
        const Tscm model = sample_tscm(g, spec.policy, derive_seed(attempt_seed, 2));

        SimConfig sc;
        sc.num_steps = spec.num_steps;
        sc.warmup = spec.warmup;

        const StabilityReport rep = stability_screen(model, sc);
        if (!rep.acceptable()) {
            ++out.rejections;
            continue;
        }

        SeriesInstance inst;
        inst.series = simulate(model, sc);
        if (spec.normalize) inst.series = minmax_normalize(inst.series);
        inst.graph = g;
        inst.id = instance_filename(index);
        inst.provenance = nlohmann::json{{"source", "synthetic"},
                                         {"tscm", tscm_to_json(model)},
                                         {"attempt", attempt}};
        out.bytes = serialize_instance(inst);
        return out;
    }
    throw std::runtime_error(
        "build_corpus: failed to generate a stable instance after " +
        std::to_string(kMaxRegenerateAttempts) + " attempts (index " +
        std::to_string(index) + ")");
}

GeneratedInstance draw_external(const CorpusSpec& spec, int index,
                                const std::vector<std::filesystem::path>& pool,
                                const std::string& tag) {
    if (pool.empty())
        throw std::runtime_error("build_corpus: external source '" + tag +
                                 "' has no instance files");
    Rng rng(derive_seed(spec.seed, index));
    SeriesInstance inst = read_instance(pool[rng.below(pool.size())]);
    inst.id = instance_filename(index);
    if (!inst.provenance.is_object()) inst.provenance = nlohmann::json::object();
    inst.provenance["source"] = tag;
    GeneratedInstance out;
    out.bytes = serialize_instance(inst);
    return out;
}

}  // namespace

CorpusManifest build_corpus(const CorpusSpec& spec,
                            const std::filesystem::path& out_dir, int jobs) {
    spec.validate();
    if (jobs < 1) jobs = 1;
    if (!std::filesystem::exists(out_dir))
        throw std::runtime_error("build_corpus: output directory does not exist: " +
                                 out_dir.string());

    const std::vector<int> schedule = mixture_schedule(spec);
    std::vector<std::vector<std::filesystem::path>> pools(spec.mixture.size());
    for (std::size_t s = 0; s < spec.mixture.size(); ++s)
        if (spec.mixture[s].source != "synthetic")
            pools[s] = list_corpus_files(spec.mixture[s].source);

    std::vector<GeneratedInstance> results(spec.count);
    auto worker = [&](int begin, int end) {
        for (int idx = begin; idx < end; ++idx) {
            const int s = schedule[idx];
            results[idx] = spec.mixture[s].source == "synthetic"
                               ? generate_synthetic(spec, idx)
                               : draw_external(spec, idx, pools[s],
                                               spec.mixture[s].source);
        }
    };

    if (jobs == 1 || spec.count < 2) {
        worker(0, spec.count);
    } else {
        std::vector<std::future<void>> futures;
        const int chunk = (spec.count + jobs - 1) / jobs;
        for (int begin = 0; begin < spec.count; begin += chunk)
            futures.push_back(std::async(std::launch::async, worker, begin,
                                         std::min(begin + chunk, spec.count)));
        for (auto& f : futures) f.get();
    }

    CorpusManifest manifest;
    manifest.count = spec.count;
    manifest.spec = spec.to_json();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (int idx = 0; idx < spec.count; ++idx) {
        const std::string name = instance_filename(idx);
        write_bytes(out_dir / name, results[idx].bytes);
        manifest.files.push_back(name);
        manifest.rejections += results[idx].rejections;
        const std::uint64_t h = fnv1a64(results[idx].bytes);
        hash = fnv1a64(reinterpret_cast<const std::uint8_t*>(&h), 8, hash);
    }
    manifest.content_hash = hash;

    std::ofstream mf(out_dir / "manifest.json", std::ios::trunc);
    if (!mf)
        throw std::runtime_error("build_corpus: cannot write manifest.json");
    mf << manifest.to_json().dump(2) << "\n";
    return manifest;
}

}  // namespace tcd
