#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "data/pipeline.hpp"
#include "model/forecaster.hpp"

namespace tkan {

// ---------------------------------------------------------------------------
// Weighted cross entropy
// ---------------------------------------------------------------------------

struct ClassWeights {
    std::array<double, 3> w{1.0, 1.0, 1.0};
};

// w_c = N / (3 * n_c); a class with zero count is a typed error (use uniform
// weighting for degenerate splits).
ClassWeights inverse_freq_weights(const ClassDistribution& dist);

// Loss and gradient for one sample: loss = -w_y log softmax(logits)_y,
// grad = w_y (softmax(logits) - onehot_y). Softmax is max-stabilized.
double weighted_ce_sample(std::span<const double> logits, int label, const ClassWeights& weights,
                          std::span<double> grad);

struct CeResult {
    double loss = 0.0;
    Matrix grad;  // B x 3, d loss / d logits
};

// Batch form: mean over samples of the per-sample loss (gradients scaled by
// 1/B accordingly).
CeResult weighted_ce(const Matrix& logits, std::span<const int> labels,
                     const ClassWeights& weights);

// ---------------------------------------------------------------------------
// Adaptive-moment gradient descent
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

// First/second moment averages with bias correction (beta1 0.9, beta2 0.999,
// eps 1e-8). Non-finite gradients are a typed error naming the coordinate.
void sgd_adaptive_step(std::span<double> params, std::span<const double> grads,
                       AdamState& state, double learning_rate);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

enum class WeightMode { inverse_frequency, uniform, explicit_weights };

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 50;
    int patience = 5;
    double lambda_l1 = 1e-4;
    uint64_t seed = 0;
    int horizon = 100;
    WeightMode weight_mode = WeightMode::inverse_frequency;
    std::array<double, 3> explicit_weights{1.0, 1.0, 1.0};
    double valid_fraction = 0.2;
    int threads = 0;  // 0 = hardware default

    void validate() const;
};

struct EpochRow {
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double valid_f1 = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> epochs;
    int best_epoch = -1;  // 0-based
    double best_f1 = 0.0;
    double wall_seconds = 0.0;
};

// Minimizes weighted CE + lambda * L1(spline coefficients) with Adam;
// early-stops on validation macro F1 with the configured patience and leaves
// the model at its best-validation parameters.
TrainReport train(Forecaster& model, std::span<const WindowSample> train_samples,
                  std::span<const WindowSample> valid_samples, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// key=value configuration text
// ---------------------------------------------------------------------------

// Applies one key/value pair; returns false when the key is unknown to the
// config (values are validated either way).
bool apply_model_kv(ModelConfig& cfg, const std::string& key, const std::string& value);
bool apply_train_kv(TrainConfig& cfg, const std::string& key, const std::string& value);

// Plain-text config: one key=value per line, '#' comments. Keys may belong to
// either config; unknown keys are a typed error.
void load_config_file(const std::string& path, ModelConfig* model_cfg, TrainConfig* train_cfg);

std::string describe(const ModelConfig& cfg);
std::string describe(const TrainConfig& cfg);

}  // namespace tkan
