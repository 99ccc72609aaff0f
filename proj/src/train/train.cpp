#include "train/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "eval/eval.hpp"

namespace tkan {

ClassWeights inverse_freq_weights(const ClassDistribution& dist) {
    require(dist.total > 0, ErrorCode::empty_input, "inverse_freq_weights: empty distribution");
    ClassWeights weights;
    for (int c = 0; c < 3; ++c) {
        require(dist.counts[c] > 0, ErrorCode::invalid_argument,
                "class " + std::to_string(c) +
                    " has no samples; inverse-frequency weights undefined (use uniform mode)");
        weights.w[c] = static_cast<double>(dist.total) / (3.0 * dist.counts[c]);
    }
    return weights;
}

double weighted_ce_sample(std::span<const double> logits, int label, const ClassWeights& weights,
                          std::span<double> grad) {
    require(logits.size() == 3 && grad.size() == 3, ErrorCode::dimension_mismatch,
            "weighted_ce_sample expects 3 logits");
    require(label >= 0 && label < 3, ErrorCode::invalid_argument,
            "label must be in {0,1,2}, got " + std::to_string(label));
    require(all_finite(logits), ErrorCode::not_finite, "weighted_ce_sample: non-finite logits");

    const double mx = std::max({logits[0], logits[1], logits[2]});
    double z = 0.0;
    std::array<double, 3> e{};
    for (int j = 0; j < 3; ++j) {
        e[j] = std::exp(logits[j] - mx);
        z += e[j];
    }
    const double w = weights.w[label];
    // -log p_y = log z - (logit_y - mx), computed without forming p_y.
    const double loss = w * (std::log(z) - (logits[label] - mx));
    for (int j = 0; j < 3; ++j) grad[j] = w * (e[j] / z - (j == label ? 1.0 : 0.0));
    return loss;
}

CeResult weighted_ce(const Matrix& logits, std::span<const int> labels,
                     const ClassWeights& weights) {
    require(logits.cols == 3, ErrorCode::dimension_mismatch, "weighted_ce: logits must be B x 3");
    require(static_cast<size_t>(logits.rows) == labels.size(), ErrorCode::dimension_mismatch,
            "weighted_ce: one label per row");
    require(logits.rows > 0, ErrorCode::empty_input, "weighted_ce: empty batch");
    CeResult result;
    result.grad = Matrix(logits.rows, 3);
    const double inv_n = 1.0 / logits.rows;
    for (int i = 0; i < logits.rows; ++i) {
        std::span<const double> row(&logits.data[static_cast<size_t>(i) * 3], 3);
        std::span<double> grow(&result.grad.data[static_cast<size_t>(i) * 3], 3);
        result.loss += weighted_ce_sample(row, labels[i], weights, grow) * inv_n;
        for (double& g : grow) g *= inv_n;
    }
    return result;
}

void sgd_adaptive_step(std::span<double> params, std::span<const double> grads,
                       AdamState& state, double learning_rate) {
    require(params.size() == grads.size(), ErrorCode::dimension_mismatch,
            "sgd_adaptive_step: params/grads length mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    require(state.m.size() == params.size(), ErrorCode::dimension_mismatch,
            "sgd_adaptive_step: moment state does not match parameters");

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g))
            fail(ErrorCode::not_finite,
                 "non-finite gradient at parameter index " + std::to_string(i));
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    require(learning_rate > 0.0, ErrorCode::invalid_argument, "learning rate must be > 0");
    require(batch_size >= 1, ErrorCode::invalid_argument, "batch size must be >= 1");
    require(max_epochs >= 1, ErrorCode::invalid_argument, "max epochs must be >= 1");
    require(patience >= 0, ErrorCode::invalid_argument, "patience must be >= 0");
    require(lambda_l1 >= 0.0, ErrorCode::invalid_argument, "lambda must be >= 0");
    require(valid_fraction > 0.0 && valid_fraction < 1.0, ErrorCode::invalid_argument,
            "valid fraction must be in (0, 1)");
    require(threads >= 0, ErrorCode::invalid_argument, "threads must be >= 0");
    horizon_index(horizon);
    if (weight_mode == WeightMode::explicit_weights)
        for (double w : explicit_weights)
            require(w > 0.0, ErrorCode::invalid_argument, "explicit weights must be > 0");
}

namespace {

// Work is split into a fixed number of chunks accumulated in chunk order, so
// results do not depend on thread count or scheduling.
constexpr int kChunks = 8;

struct ChunkAccum {
    std::vector<double> grads;
    double loss_sum = 0.0;
};

int resolve_threads(int requested) {
    if (requested > 0) return std::min(requested, kChunks);
    const unsigned hw = std::thread::hardware_concurrency();
    return std::min<int>(hw == 0 ? 1 : static_cast<int>(hw), kChunks);
}

template <typename Fn>
void run_chunked(size_t n_items, int threads, Fn&& body) {
    if (n_items == 0) return;
    if (threads <= 1) {
        for (int c = 0; c < kChunks; ++c) {
            const size_t lo = n_items * c / kChunks;
            const size_t hi = n_items * (c + 1) / kChunks;
            body(c, lo, hi);
        }
        return;
    }
    std::vector<std::future<void>> tasks;
    tasks.reserve(kChunks);
    for (int c = 0; c < kChunks; ++c) {
        const size_t lo = n_items * c / kChunks;
        const size_t hi = n_items * (c + 1) / kChunks;
        tasks.push_back(std::async(std::launch::async, [c, lo, hi, &body] { body(c, lo, hi); }));
    }
    for (auto& t : tasks) t.get();
}

double spline_l1(std::span<const double> params, const std::vector<ParamBlock>& registry) {
    double acc = 0.0;
    for (const auto& block : registry) {
        if (!block.spline_coeff) continue;
        for (size_t i = block.offset; i < block.offset + block.size; ++i)
            acc += std::fabs(params[i]);
    }
    return acc;
}

struct ValidResult {
    double loss = 0.0;
    double macro_f1 = 0.0;
};

ValidResult evaluate_split(const Forecaster& model, std::span<const WindowSample> samples,
                           const ClassWeights& weights, const TrainConfig& cfg, int threads,
                           double l1_term) {
    std::vector<int> cls(samples.size());
    std::vector<int> truth(samples.size());
    std::array<double, kChunks> loss_sums{};
    run_chunked(samples.size(), threads, [&](int chunk, size_t lo, size_t hi) {
        std::array<double, 3> grad{};
        for (size_t i = lo; i < hi; ++i) {
            const std::array<double, 3> logits = forward(model, samples[i]);
            const int label = samples[i].label(cfg.horizon);
            loss_sums[chunk] += weighted_ce_sample(logits, label, weights, grad);
            cls[i] = argmax_class(softmax3(logits));
            truth[i] = label;
        }
    });
    double loss = 0.0;
    for (double s : loss_sums) loss += s;
    ValidResult out;
    out.loss = loss / static_cast<double>(samples.size()) + l1_term;
    out.macro_f1 = metrics(confusion_from_pairs(truth, cls)).macro_f1;
    return out;
}

}  // namespace

TrainReport train(Forecaster& model, std::span<const WindowSample> train_samples,
                  std::span<const WindowSample> valid_samples, const TrainConfig& cfg) {
    cfg.validate();
    require(!train_samples.empty() && !valid_samples.empty(), ErrorCode::empty_input,
            "train: both splits must be non-empty");

    const auto t_start = std::chrono::steady_clock::now();
    const int threads = resolve_threads(cfg.threads);

    ClassWeights weights;
    switch (cfg.weight_mode) {
        case WeightMode::inverse_frequency:
            weights = inverse_freq_weights(class_distribution(train_samples, cfg.horizon));
            break;
        case WeightMode::uniform:
            break;
        case WeightMode::explicit_weights:
            weights.w = cfg.explicit_weights;
            break;
    }

    const size_t n_params = model.param_count();
    std::vector<double> params(n_params);
    model.copy_params(params);

    AdamState adam;
    std::vector<double> batch_grads(n_params);
    std::vector<ChunkAccum> chunks(kChunks);
    for (auto& c : chunks) c.grads.assign(n_params, 0.0);

    std::vector<size_t> order(train_samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainReport report;
    std::vector<double> best_params = params;
    int epochs_without_improvement = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        RngState shuffle_rng = RngState(cfg.seed).split(1000 + epoch);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);

        double epoch_loss = 0.0;
        size_t batch_count = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            const size_t bsize = stop - start;
            const double inv_b = 1.0 / static_cast<double>(bsize);

            for (auto& c : chunks) {
                std::fill(c.grads.begin(), c.grads.end(), 0.0);
                c.loss_sum = 0.0;
            }
            run_chunked(bsize, threads, [&](int chunk, size_t lo, size_t hi) {
                ModelForwardCache cache;
                std::array<double, 3> grad3{};
                for (size_t i = lo; i < hi; ++i) {
                    const WindowSample& sample = train_samples[order[start + i]];
                    const std::array<double, 3> logits = forward(model, sample, &cache);
                    chunks[chunk].loss_sum +=
                        weighted_ce_sample(logits, sample.label(cfg.horizon), weights, grad3);
                    for (double& g : grad3) g *= inv_b;
                    const std::vector<double> g = backward(model, cache, grad3);
                    for (size_t j = 0; j < g.size(); ++j) chunks[chunk].grads[j] += g[j];
                }
            });

            std::fill(batch_grads.begin(), batch_grads.end(), 0.0);
            double ce_loss = 0.0;
            for (const auto& c : chunks) {
                ce_loss += c.loss_sum;
                for (size_t j = 0; j < n_params; ++j) batch_grads[j] += c.grads[j];
            }
            ce_loss *= inv_b;

            // L1 subgradient on spline coefficients (0 at 0).
            double l1_term = 0.0;
            if (cfg.lambda_l1 > 0.0) {
                for (const auto& block : model.registry()) {
                    if (!block.spline_coeff) continue;
                    for (size_t j = block.offset; j < block.offset + block.size; ++j) {
                        l1_term += std::fabs(params[j]);
                        if (params[j] > 0.0)
                            batch_grads[j] += cfg.lambda_l1;
                        else if (params[j] < 0.0)
                            batch_grads[j] -= cfg.lambda_l1;
                    }
                }
            }
            const double batch_loss = ce_loss + cfg.lambda_l1 * l1_term;
            if (!std::isfinite(batch_loss))
                fail(ErrorCode::divergence, "training diverged at epoch " +
                                                std::to_string(epoch + 1) + ", batch " +
                                                std::to_string(batch_count + 1));
            epoch_loss += batch_loss;
            ++batch_count;

            sgd_adaptive_step(params, batch_grads, adam, cfg.learning_rate);
            model.set_params(params);
        }

        const double valid_l1 =
            cfg.lambda_l1 > 0.0 ? cfg.lambda_l1 * spline_l1(params, model.registry()) : 0.0;
        const ValidResult valid = evaluate_split(model, valid_samples, weights, cfg, threads,
                                                 valid_l1);

        EpochRow row;
        row.train_loss = epoch_loss / static_cast<double>(batch_count);
        row.valid_loss = valid.loss;
        row.valid_f1 = valid.macro_f1;
        report.epochs.push_back(row);

        if (valid.macro_f1 > report.best_f1 || report.best_epoch < 0) {
            report.best_f1 = valid.macro_f1;
            report.best_epoch = epoch;
            best_params = params;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement > cfg.patience) break;
        }
    }

    model.set_params(best_params);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

// ---------------------------------------------------------------------------
// key=value configuration
// ---------------------------------------------------------------------------

namespace {

int parse_int(const std::string& key, const std::string& value) {
    int out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && p == value.data() + value.size(), ErrorCode::invalid_argument,
            "config key '" + key + "' expects an integer, got '" + value + "'");
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && p == value.data() + value.size(), ErrorCode::invalid_argument,
            "config key '" + key + "' expects an unsigned integer, got '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && p == value.data() + value.size(), ErrorCode::invalid_argument,
            "config key '" + key + "' expects a number, got '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    fail(ErrorCode::invalid_argument,
         "config key '" + key + "' expects 0/1/true/false, got '" + value + "'");
}

}  // namespace

bool apply_model_kv(ModelConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "variant") cfg.variant = variant_from_name(value);
    else if (key == "input_dim") cfg.input_dim = parse_int(key, value);
    else if (key == "window") cfg.window = parse_int(key, value);
    else if (key == "hidden_dim") cfg.hidden_dim = parse_int(key, value);
    else if (key == "encoder_layers") cfg.encoder_layers = parse_int(key, value);
    else if (key == "head_hidden") cfg.head_hidden = parse_int(key, value);
    else if (key == "head_concat") cfg.head_concat = parse_bool(key, value);
    else if (key == "conv_channels") cfg.conv_channels = parse_int(key, value);
    else if (key == "grid_order") cfg.grid.order = parse_int(key, value);
    else if (key == "grid_intervals") cfg.grid.intervals = parse_int(key, value);
    else if (key == "grid_lo") cfg.grid.lo = parse_double(key, value);
    else if (key == "grid_hi") cfg.grid.hi = parse_double(key, value);
    else return false;
    return true;
}

bool apply_train_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "lr" || key == "learning_rate") cfg.learning_rate = parse_double(key, value);
    else if (key == "batch") cfg.batch_size = parse_int(key, value);
    else if (key == "epochs") cfg.max_epochs = parse_int(key, value);
    else if (key == "patience") cfg.patience = parse_int(key, value);
    else if (key == "lambda") cfg.lambda_l1 = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "horizon") {
        const int k = parse_int(key, value);
        horizon_index(k);
        cfg.horizon = k;
    }
    else if (key == "valid_frac") cfg.valid_fraction = parse_double(key, value);
    else if (key == "threads") cfg.threads = parse_int(key, value);
    else if (key == "weight_mode") {
        if (value == "inverse_frequency") cfg.weight_mode = WeightMode::inverse_frequency;
        else if (value == "uniform") cfg.weight_mode = WeightMode::uniform;
        else if (value == "explicit") cfg.weight_mode = WeightMode::explicit_weights;
        else fail(ErrorCode::invalid_argument, "unknown weight_mode '" + value + "'");
    } else if (key == "explicit_weights") {
        std::stringstream ss(value);
        std::string item;
        for (int c = 0; c < 3; ++c) {
            require(static_cast<bool>(std::getline(ss, item, ',')), ErrorCode::invalid_argument,
                    "explicit_weights expects three comma-separated values");
            cfg.explicit_weights[c] = parse_double(key, item);
        }
    } else return false;
    return true;
}

void load_config_file(const std::string& path, ModelConfig* model_cfg, TrainConfig* train_cfg) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open config file: " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::invalid_argument,
                "config line " + std::to_string(line_no) + " is not key=value: '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        bool handled = false;
        if (model_cfg) handled = apply_model_kv(*model_cfg, key, value);
        if (!handled && train_cfg) handled = apply_train_kv(*train_cfg, key, value);
        require(handled, ErrorCode::invalid_argument,
                "unknown config key '" + key + "' at line " + std::to_string(line_no));
    }
}

namespace {

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

std::string describe(const ModelConfig& cfg) {
    std::ostringstream out;
    out << "variant=" << variant_name(cfg.variant) << '\n'
        << "input_dim=" << cfg.input_dim << '\n'
        << "window=" << cfg.window << '\n'
        << "hidden_dim=" << cfg.hidden_dim << '\n'
        << "encoder_layers=" << cfg.encoder_layers << '\n'
        << "head_hidden=" << cfg.head_hidden << '\n'
        << "head_concat=" << (cfg.head_concat ? 1 : 0) << '\n'
        << "conv_channels=" << cfg.conv_channels << '\n'
        << "grid_order=" << cfg.grid.order << '\n'
        << "grid_intervals=" << cfg.grid.intervals << '\n'
        << "grid_lo=" << num(cfg.grid.lo) << '\n'
        << "grid_hi=" << num(cfg.grid.hi) << '\n';
    return out.str();
}

std::string describe(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "lr=" << num(cfg.learning_rate) << '\n'
        << "batch=" << cfg.batch_size << '\n'
        << "epochs=" << cfg.max_epochs << '\n'
        << "patience=" << cfg.patience << '\n'
        << "lambda=" << num(cfg.lambda_l1) << '\n'
        << "seed=" << cfg.seed << '\n'
        << "horizon=" << cfg.horizon << '\n';
    const char* mode = cfg.weight_mode == WeightMode::inverse_frequency ? "inverse_frequency"
                       : cfg.weight_mode == WeightMode::uniform         ? "uniform"
                                                                        : "explicit";
    out << "weight_mode=" << mode << '\n';
    if (cfg.weight_mode == WeightMode::explicit_weights)
        out << "explicit_weights=" << num(cfg.explicit_weights[0]) << ','
            << num(cfg.explicit_weights[1]) << ',' << num(cfg.explicit_weights[2]) << '\n';
    out << "valid_frac=" << num(cfg.valid_fraction) << '\n'
        << "threads=" << cfg.threads << '\n';
    return out.str();
}

}  // namespace tkan
