#include "tcd/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tcd/container.hpp"
#include "tcd/rng.hpp"

namespace tcd {

namespace {

constexpr char kModelMagic[4] = {'T', 'C', 'D', 'M'};
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

}  // namespace

void LossConfig::validate() const {
    if (lambda_edge < 0.0 || lambda_corr < 0.0)
        throw std::invalid_argument("LossConfig: negative lambda");
    if (!(gamma > 1.0)) throw std::invalid_argument("LossConfig: gamma must be > 1");
}

BinaryTensor label_tensor(const LaggedGraph& g, int v_max, int max_lag) {
    if (g.num_vars > v_max || g.max_lag > max_lag)
        throw std::invalid_argument("label_tensor: graph exceeds padded shape");
    BinaryTensor label(v_max, max_lag, 0);
    for (int j = 0; j < g.num_vars; ++j)
        for (int i = 0; i < g.num_vars; ++i)
            for (int lag = 1; lag <= g.max_lag; ++lag)
                if (g.has_edge(i, j, lag)) label(j, i, max_lag - lag) = 1;
    return label;
}

LossResult composite_loss(const RealTensor& pred, const BinaryTensor& truth,
                          const RealTensor& cc, const LossConfig& cfg) {
    cfg.validate();
    if (pred.num_vars() != truth.num_vars() ||
        pred.num_slices() != truth.num_slices() || !pred.same_shape(cc))
        throw std::invalid_argument("composite_loss: shape mismatch");

    const double inv_n = 1.0 / static_cast<double>(pred.size());
    LossResult out;
    out.grad = RealTensor(pred.num_vars(), pred.num_slices(), 0.0);

    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double p = pred.data()[k];
        const double y = truth.data()[k];
        const double c = cc.data()[k];
        const double pc = std::clamp(p, kClampLo, kClampHi);

        out.edge += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) * inv_n;
        const double weight = std::pow(c, cfg.gamma);
        out.corr += (p - c) * (p - c) * weight * inv_n;

        double g = 0.0;
        if (p > kClampLo && p < kClampHi)
            g += cfg.lambda_edge * inv_n * (pc - y) / (pc * (1.0 - pc));
        g += cfg.lambda_corr * inv_n * 2.0 * (p - c) * weight;
        out.grad.data()[k] = g;
    }
    out.total = cfg.lambda_edge * out.edge + cfg.lambda_corr * out.corr;
    return out;
}

ToyPredictor ToyPredictor::init(int v_max, int max_lag, int hidden,
                                std::uint64_t seed) {
    if (v_max < 1 || max_lag < 1 || hidden < 1)
        throw std::invalid_argument("ToyPredictor: bad dimensions");
    ToyPredictor m;
    m.v_max = v_max;
    m.max_lag = max_lag;
    m.hidden = hidden;
    const int dim = m.feature_dim();
    Rng rng(seed);
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(dim));
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    m.w1.resize(hidden, dim);
    for (int r = 0; r < hidden; ++r)
        for (int c = 0; c < dim; ++c) m.w1(r, c) = rng.normal(0.0, scale1);
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2.resize(dim, hidden);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < hidden; ++c) m.w2(r, c) = rng.normal(0.0, scale2);
    m.b2 = Eigen::VectorXd::Zero(dim);
    return m;
}

void ToyPredictor::validate() const {
    const int dim = feature_dim();
    if (w1.rows() != hidden || w1.cols() != dim || b1.size() != hidden ||
        w2.rows() != dim || w2.cols() != hidden || b2.size() != dim)
        throw std::runtime_error("ToyPredictor: weight shape mismatch");
}

Eigen::VectorXd correlation_features(const SeriesInstance& inst, int v_max,
                                     int max_lag, std::uint64_t pad_seed) {
    const PaddedInstance padded = pad_instance(
        inst, static_cast<int>(inst.series.rows()), v_max, max_lag, pad_seed);
    const Eigen::MatrixXd normalized = minmax_normalize(padded.series);
    const CorrTensor cc =
        normalize_cc(lagged_crosscorr(normalized, max_lag, v_max));
    return Eigen::Map<const Eigen::VectorXd>(
        cc.values.data().data(), static_cast<Eigen::Index>(cc.values.size()));
}

namespace {

struct Forward {
    Eigen::VectorXd hidden_act;  // tanh(z1)
    Eigen::VectorXd probs;       // sigmoid(z2)
};

Forward forward_pass(const ToyPredictor& m, const Eigen::VectorXd& features) {
    Forward f;
    f.hidden_act = ((m.w1 * features) + m.b1).array().tanh();
    const Eigen::VectorXd z2 = m.w2 * f.hidden_act + m.b2;
    f.probs = 1.0 / (1.0 + (-z2.array()).exp());
    return f;
}

RealTensor probs_to_tensor(const Eigen::VectorXd& probs, int v_max,
                           int max_lag) {
    RealTensor t(v_max, max_lag);
    for (Eigen::Index k = 0; k < probs.size(); ++k) t.data()[k] = probs(k);
    return t;
}

}  // namespace

RealTensor predict(const ToyPredictor& model, const SeriesInstance& inst,
                   std::uint64_t pad_seed) {
    model.validate();
    const Eigen::VectorXd features =
        correlation_features(inst, model.v_max, model.max_lag, pad_seed);
    return probs_to_tensor(forward_pass(model, features).probs, model.v_max,
                           model.max_lag);
}

std::string TrainHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,val_auc\n";
    for (const auto& e : epochs)
        os << e.epoch << "," << e.train_loss << "," << e.val_loss << ","
           << e.val_auc << "\n";
    return os.str();
}

TrainHistory train(const std::vector<SeriesInstance>& corpus,
                   ToyPredictor& model, const LossConfig& loss_cfg,
                   const TrainConfig& train_cfg) {
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    loss_cfg.validate();
    model.validate();

    const int v_max = model.v_max;
    const int max_lag = model.max_lag;

    struct Prepared {
        Eigen::VectorXd features;
        BinaryTensor label;
        RealTensor cc;
        const SeriesInstance* inst;
    };
    std::vector<Prepared> data;
    data.reserve(corpus.size());
    for (const auto& inst : corpus) {
        Prepared p;
        p.features =
            correlation_features(inst, v_max, max_lag, train_cfg.pad_seed);
        p.label = label_tensor(inst.graph, v_max, max_lag);
        p.cc = RealTensor(v_max, max_lag);
        for (Eigen::Index k = 0; k < p.features.size(); ++k)
            p.cc.data()[k] = p.features(k);
        p.inst = &inst;
        data.push_back(std::move(p));
    }

    // Seeded shuffle, last val_fraction held out.
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(train_cfg.seed);
    for (int k = static_cast<int>(order.size()) - 1; k > 0; --k)
        std::swap(order[k], order[rng.below(k + 1)]);
    int n_val = static_cast<int>(
        std::round(train_cfg.val_fraction * static_cast<double>(data.size())));
    n_val = std::min(n_val, static_cast<int>(data.size()) - 1);
    const int n_train = static_cast<int>(data.size()) - n_val;
    std::vector<int> train_idx(order.begin(), order.begin() + n_train);
    std::vector<int> val_idx(order.begin() + n_train, order.end());

    Eigen::MatrixXd vw1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    Eigen::VectorXd vb1 = Eigen::VectorXd::Zero(model.b1.size());
    Eigen::MatrixXd vw2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
    Eigen::VectorXd vb2 = Eigen::VectorXd::Zero(model.b2.size());

    TrainHistory history;
    ToyPredictor best = model;
    int epochs_since_best = 0;

    auto evaluate = [&](const std::vector<int>& idx, double& loss_out,
                        double& auc_out) {
        double loss_sum = 0.0;
        double auc_sum = 0.0;
        int auc_n = 0;
        for (int k : idx) {
            const Forward f = forward_pass(model, data[k].features);
            const RealTensor pred = probs_to_tensor(f.probs, v_max, max_lag);
            const LossResult lr =
                composite_loss(pred, data[k].label, data[k].cc, loss_cfg);
            loss_sum += lr.total;
            try {
                const BinaryTensor mask = make_eval_mask(
                    data[k].inst->graph.num_vars, data[k].inst->graph.max_lag,
                    v_max, max_lag);
                auc_sum += auc(pred, data[k].inst->graph, mask);
                ++auc_n;
            } catch (const std::exception&) {
                // degenerate truth (no edges or all edges): skipped
            }
        }
        loss_out = idx.empty() ? 0.0 : loss_sum / idx.size();
        auc_out = auc_n > 0 ? auc_sum / auc_n : 0.0;
    };

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        // Seeded per-epoch shuffle of the training slice.
        Rng erng(derive_seed(train_cfg.seed, 1000 + epoch));
        for (int k = static_cast<int>(train_idx.size()) - 1; k > 0; --k)
            std::swap(train_idx[k], train_idx[erng.below(k + 1)]);

        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t begin = 0; begin < train_idx.size();
             begin += train_cfg.batch_size) {
            const std::size_t end =
                std::min(begin + train_cfg.batch_size, train_idx.size());
            const double inv_batch = 1.0 / static_cast<double>(end - begin);

            Eigen::MatrixXd gw1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
            Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(model.b1.size());
            Eigen::MatrixXd gw2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
            Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(model.b2.size());
            double batch_loss = 0.0;

            for (std::size_t s = begin; s < end; ++s) {
                const Prepared& ex = data[train_idx[s]];
                const Forward f = forward_pass(model, ex.features);
                const RealTensor pred = probs_to_tensor(f.probs, v_max, max_lag);
                const LossResult lr =
                    composite_loss(pred, ex.label, ex.cc, loss_cfg);
                batch_loss += lr.total;

                const Eigen::Map<const Eigen::VectorXd> dp(
                    lr.grad.data().data(),
                    static_cast<Eigen::Index>(lr.grad.size()));
                const Eigen::VectorXd dz2 =
                    dp.array() * f.probs.array() * (1.0 - f.probs.array());
                gw2.noalias() += dz2 * f.hidden_act.transpose();
                gb2 += dz2;
                const Eigen::VectorXd dh = model.w2.transpose() * dz2;
                const Eigen::VectorXd dz1 =
                    dh.array() * (1.0 - f.hidden_act.array().square());
                gw1.noalias() += dz1 * ex.features.transpose();
                gb1 += dz1;
            }

            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "train: loss diverged (epoch " + std::to_string(epoch) +
                    ", batch starting at " + std::to_string(begin) + ")");

            vw1 = train_cfg.momentum * vw1 - train_cfg.learning_rate * inv_batch * gw1;
            vb1 = train_cfg.momentum * vb1 - train_cfg.learning_rate * inv_batch * gb1;
            vw2 = train_cfg.momentum * vw2 - train_cfg.learning_rate * inv_batch * gw2;
            vb2 = train_cfg.momentum * vb2 - train_cfg.learning_rate * inv_batch * gb2;
            model.w1 += vw1;
            model.b1 += vb1;
            model.w2 += vw2;
            model.b2 += vb2;

            epoch_loss += batch_loss * inv_batch;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = batches > 0 ? epoch_loss / batches : 0.0;
        if (!val_idx.empty()) {
            evaluate(val_idx, rec.val_loss, rec.val_auc);
        } else {
            double unused_auc = 0.0;
            evaluate(train_idx, rec.val_loss, unused_auc);
            rec.val_auc = unused_auc;
        }
        history.epochs.push_back(rec);

        if (rec.val_auc > history.best_val_auc || history.best_epoch < 0) {
            history.best_val_auc = rec.val_auc;
            history.best_epoch = epoch;
            best = model;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= train_cfg.patience) {
            break;
        }
    }

    if (history.best_epoch >= 0) model = best;
    return history;
}

void ArchConfig::validate() const {
    if (blocks < 0 || d_model < 1 || n_heads < 1 || d_ff < 1 || kernel < 1 ||
        v_max < 1 || max_lag < 1)
        throw std::invalid_argument("ArchConfig: bad dimension");
    if (train_aid != 0 && train_aid != 1)
        throw std::invalid_argument("ArchConfig: train_aid must be 0 or 1");
    if (distil != 0 && distil != 1)
        throw std::invalid_argument("ArchConfig: distil must be 0 or 1");
    if (d_model % n_heads != 0)
        throw std::invalid_argument("ArchConfig: d_model not divisible by n_heads");
}

ParamBreakdown param_count(const ArchConfig& cfg) {
    cfg.validate();
    const long long d = cfg.d_model;
    const long long ff = cfg.d_ff;
    const long long k = cfg.kernel;
    const long long b = cfg.blocks;
    const long long a =
        static_cast<long long>(cfg.v_max) * cfg.v_max * cfg.max_lag;

    ParamBreakdown out;
    out.embedding = d * cfg.v_max * k + d;
    out.encoder = b * (4 * d * d + 2 * ff * d + ff + 9 * d);
    out.distil = cfg.distil && b >= 1 ? (b - 1) * (d * d * k + 3 * d) : 0;
    out.head_hidden = (d + cfg.train_aid * a) * ff + ff;
    out.head_output = ff * a + a;
    out.total = out.embedding + out.encoder + out.distil + out.head_hidden +
                out.head_output;
    out.note =
        "assumes conv kernel k=" + std::to_string(cfg.kernel) +
        "; published per-model totals can disagree with this closed form for "
        "large configurations";
    return out;
}

void write_checkpoint(const ToyPredictor& model,
                      const std::filesystem::path& path) {
    model.validate();
    Container c;
    std::copy(kModelMagic, kModelMagic + 4, c.magic.begin());
    c.meta = nlohmann::json{{"v_max", model.v_max},
                            {"max_lag", model.max_lag},
                            {"hidden", model.hidden}};
    std::vector<float> payload;
    auto append_matrix = [&](const Eigen::MatrixXd& m) {
        for (int r = 0; r < m.rows(); ++r)
            for (int col = 0; col < m.cols(); ++col)
                payload.push_back(static_cast<float>(m(r, col)));
    };
    append_matrix(model.w1);
    append_matrix(model.b1);
    append_matrix(model.w2);
    append_matrix(model.b2);
    c.payload = pack_f32(payload);
    write_bytes(path, container_serialize(c));
}

ToyPredictor read_checkpoint(const std::filesystem::path& path) {
    const Container c = container_deserialize(read_bytes(path), kModelMagic);
    ToyPredictor m;
    m.v_max = c.meta.at("v_max").get<int>();
    m.max_lag = c.meta.at("max_lag").get<int>();
    m.hidden = c.meta.at("hidden").get<int>();
    const int dim = m.feature_dim();
    const std::vector<float> payload = unpack_f32(c.payload);
    const std::size_t expected = static_cast<std::size_t>(m.hidden) * dim +
                                 m.hidden +
                                 static_cast<std::size_t>(dim) * m.hidden + dim;
    if (payload.size() != expected)
        throw std::runtime_error("checkpoint: payload size mismatch");
    std::size_t pos = 0;
    auto take_matrix = [&](Eigen::MatrixXd& mat, int rows, int cols) {
        mat.resize(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int col = 0; col < cols; ++col) mat(r, col) = payload[pos++];
    };
    take_matrix(m.w1, m.hidden, dim);
    Eigen::MatrixXd tmp;
    take_matrix(tmp, m.hidden, 1);
    m.b1 = tmp.col(0);
    take_matrix(m.w2, dim, m.hidden);
    take_matrix(tmp, dim, 1);
    m.b2 = tmp.col(0);
    m.validate();
    return m;
}

}  // namespace tcd
