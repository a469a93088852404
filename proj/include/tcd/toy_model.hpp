#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcd/corpus.hpp"
#include "tcd/stats.hpp"
#include "tcd/tensor.hpp"

namespace tcd {

struct LossConfig {
    double lambda_edge = 1.0;
    double lambda_corr = 0.75;
    double gamma = 2.0;  // > 1, emphasizes strong correlations

    void validate() const;
};

struct LossResult {
    double total = 0.0;
    double edge = 0.0;
    double corr = 0.0;
    RealTensor grad;  // d total / d pred, per cell
};

// Composite objective: mean BCE over every cell of the padded tensor plus a
// weighted MSE pulling predictions toward strong normalized correlations.
// pred entries are clamped to [1e-7, 1 - 1e-7] before logs; the returned
// gradient is analytic in the prediction.
LossResult composite_loss(const RealTensor& pred, const BinaryTensor& truth,
                          const RealTensor& cc, const LossConfig& cfg);

// Truth graph expanded into the padded label layout.
BinaryTensor label_tensor(const LaggedGraph& g, int v_max, int max_lag);

// Correlation-feature feedforward predictor: flattened normalized lagged
// cross-correlations -> tanh hidden layer -> per-cell sigmoid scores.
struct ToyPredictor {
    int v_max = 0;
    int max_lag = 0;
    int hidden = 64;
    Eigen::MatrixXd w1;  // hidden x D
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;  // D x hidden
    Eigen::VectorXd b2;

    static ToyPredictor init(int v_max, int max_lag, int hidden,
                             std::uint64_t seed);
    int feature_dim() const { return v_max * v_max * max_lag; }
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.5;
    double momentum = 0.9;
    int epochs = 30;
    int batch_size = 32;
    double val_fraction = 0.1;
    int patience = 5;  // early stopping on validation AUC
    std::uint64_t seed = 0;
    std::uint64_t pad_seed = 0;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_auc = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_auc = 0.0;

    std::string to_csv() const;
};

// Mini-batch SGD with manual backprop; validation split carved out by seeded
// shuffle. Returns the per-epoch history; the model is left at the best
// validation-AUC weights.
TrainHistory train(const std::vector<SeriesInstance>& corpus,
                   ToyPredictor& model, const LossConfig& loss_cfg,
                   const TrainConfig& train_cfg);

// pad -> min-max normalize -> lagged cross-correlation -> normalize ->
// forward pass. Runtime is independent of the instance's variable count.
RealTensor predict(const ToyPredictor& model, const SeriesInstance& inst,
                   std::uint64_t pad_seed = 0);

// Feature extraction shared by train and predict.
Eigen::VectorXd correlation_features(const SeriesInstance& inst, int v_max,
                                     int max_lag, std::uint64_t pad_seed);

struct ArchConfig {
    int blocks = 1;          // B
    int d_model = 256;
    int n_heads = 2;
    int d_ff = 256;
    int kernel = 3;          // conv kernel size k
    int train_aid = 1;       // I_train
    int distil = 1;          // I_distil
    int v_max = 12;
    int max_lag = 3;

    void validate() const;
};

struct ParamBreakdown {
    long long embedding = 0;
    long long encoder = 0;
    long long distil = 0;
    long long head_hidden = 0;  // (d_model + I_train * A) * d_ff + d_ff
    long long head_output = 0;  // d_ff * A + A
    long long total = 0;
    std::string note;
};

// Closed-form trainable-parameter count for the reference encoder
// architecture, term by term, with A = v_max^2 * max_lag.
ParamBreakdown param_count(const ArchConfig& cfg);

// Checkpoint IO (.tcm): header + JSON hyperparameters + float32 weights + hash.
void write_checkpoint(const ToyPredictor& model,
                      const std::filesystem::path& path);
ToyPredictor read_checkpoint(const std::filesystem::path& path);

}  // namespace tcd
