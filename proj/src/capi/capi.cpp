#include "tkan/tkan.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "data/pipeline.hpp"
#include "eval/eval.hpp"
#include "model/checkpoint.hpp"
#include "model/forecaster.hpp"
#include "train/train.hpp"

namespace {

thread_local std::string g_last_error;

void set_last_error(const char* what) { g_last_error = what ? what : "unknown error"; }

tkan_status map_code(tkan::ErrorCode code) {
    using EC = tkan::ErrorCode;
    switch (code) {
        case EC::invalid_argument: return TKAN_ERR_INVALID_ARGUMENT;
        case EC::dimension_mismatch: return TKAN_ERR_DIMENSION;
        case EC::parse: return TKAN_ERR_PARSE;
        case EC::io: return TKAN_ERR_IO;
        case EC::corrupt: return TKAN_ERR_CORRUPT;
        case EC::version_mismatch: return TKAN_ERR_VERSION;
        case EC::shape_mismatch: return TKAN_ERR_SHAPE;
        case EC::divergence: return TKAN_ERR_DIVERGENCE;
        case EC::not_finite: return TKAN_ERR_NOT_FINITE;
        case EC::out_of_range: return TKAN_ERR_OUT_OF_RANGE;
        case EC::missing_horizon: return TKAN_ERR_MISSING_HORIZON;
        case EC::empty_input: return TKAN_ERR_EMPTY;
    }
    return TKAN_ERR_INTERNAL;
}

template <typename Fn>
tkan_status wrap(Fn&& fn) noexcept {
    try {
        fn();
        return TKAN_OK;
    } catch (const tkan::Error& e) {
        set_last_error(e.what());
        return map_code(e.code());
    } catch (const std::exception& e) {
        set_last_error(e.what());
        return TKAN_ERR_INTERNAL;
    } catch (...) {
        set_last_error("unknown error");
        return TKAN_ERR_INTERNAL;
    }
}

tkan_status require_arg(bool ok, const char* message) {
    if (ok) return TKAN_OK;
    set_last_error(message);
    return TKAN_ERR_INVALID_ARGUMENT;
}

struct HorizonEval {
    tkan::MetricsReport metrics;
    double ic = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

struct tkan_dataset {
    tkan::Dataset data;
};

struct tkan_model_config {
    tkan::ModelConfig cfg;
    std::string buf;
};

struct tkan_train_config {
    tkan::TrainConfig cfg;
    std::string buf;
};

struct tkan_model {
    tkan::Forecaster model;
    std::string buf;
};

struct tkan_train_report {
    tkan::TrainReport report;
};

struct tkan_eval_result {
    std::map<int, HorizonEval> by_horizon;
    size_t samples = 0;
};

struct tkan_backtest_result {
    tkan::BacktestLedger ledger;
};

extern "C" {

const char* tkan_version(void) { return "0.1.0"; }

const char* tkan_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */
/* Datasets                                                            */
/* ------------------------------------------------------------------ */

tkan_status tkan_dataset_load_fi2010(const char* path, tkan_layout layout, tkan_dataset** out) {
    if (auto s = require_arg(path && out, "path and out must be non-NULL")) return s;
    return wrap([&] {
        auto ds = std::make_unique<tkan_dataset>();
        ds->data = tkan::load_fi2010(path, layout == TKAN_ROWS_ARE_FEATURES
                                               ? tkan::FileLayout::rows_are_features
                                               : tkan::FileLayout::rows_are_samples);
        *out = ds.release();
    });
}

tkan_status tkan_dataset_synthetic(uint64_t seed, size_t n, tkan_dataset** out) {
    if (auto s = require_arg(out != nullptr, "out must be non-NULL")) return s;
    return wrap([&] {
        auto ds = std::make_unique<tkan_dataset>();
        ds->data = tkan::synth_lob(tkan::RngState(seed), n);
        *out = ds.release();
    });
}

tkan_status tkan_dataset_load_cache(const char* path, tkan_dataset** out) {
    if (auto s = require_arg(path && out, "path and out must be non-NULL")) return s;
    return wrap([&] {
        auto ds = std::make_unique<tkan_dataset>();
        ds->data = tkan::load_cache(path);
        *out = ds.release();
    });
}

tkan_status tkan_dataset_save_cache(const tkan_dataset* data, const char* path) {
    if (auto s = require_arg(data && path, "dataset and path must be non-NULL")) return s;
    return wrap([&] { tkan::save_cache(data->data, path); });
}

tkan_status tkan_dataset_zscore(tkan_dataset* data, double train_fraction,
                                size_t* out_constant) {
    if (auto s = require_arg(data != nullptr, "dataset must be non-NULL")) return s;
    return wrap([&] {
        tkan::require(train_fraction > 0.0 && train_fraction <= 1.0,
                      tkan::ErrorCode::invalid_argument, "train fraction must be in (0, 1]");
        const size_t cut = std::max<size_t>(
            2, static_cast<size_t>(static_cast<double>(data->data.size()) * train_fraction));
        tkan::Dataset head;
        head.feature_dim = data->data.feature_dim;
        const size_t n = std::min(cut, data->data.size());
        head.features.assign(data->data.features.begin(),
                             data->data.features.begin() + n * head.feature_dim);
        head.labels.assign(data->data.labels.begin(), data->data.labels.begin() + n);
        const tkan::NormStats stats = tkan::zscore_fit(head);
        tkan::zscore_apply(stats, data->data);
        if (out_constant) *out_constant = stats.constant_features.size();
    });
}

size_t tkan_dataset_size(const tkan_dataset* data) { return data ? data->data.size() : 0; }

uint64_t tkan_dataset_fingerprint(const tkan_dataset* data) {
    return data ? data->data.fingerprint : 0;
}

void tkan_dataset_free(tkan_dataset* data) { delete data; }

/* ------------------------------------------------------------------ */
/* Configuration                                                       */
/* ------------------------------------------------------------------ */

tkan_status tkan_model_config_create(const char* variant, tkan_model_config** out) {
    if (auto s = require_arg(variant && out, "variant and out must be non-NULL")) return s;
    return wrap([&] {
        auto cfg = std::make_unique<tkan_model_config>();
        cfg->cfg.variant = tkan::variant_from_name(variant);
        *out = cfg.release();
    });
}

tkan_status tkan_model_config_set(tkan_model_config* cfg, const char* key, const char* value) {
    if (auto s = require_arg(cfg && key && value, "cfg, key and value must be non-NULL"))
        return s;
    return wrap([&] {
        tkan::require(tkan::apply_model_kv(cfg->cfg, key, value),
                      tkan::ErrorCode::invalid_argument,
                      std::string("unknown model config key '") + key + "'");
    });
}

const char* tkan_model_config_describe(tkan_model_config* cfg) {
    if (!cfg) return "";
    cfg->buf = tkan::describe(cfg->cfg);
    return cfg->buf.c_str();
}

void tkan_model_config_free(tkan_model_config* cfg) { delete cfg; }

tkan_status tkan_train_config_create(tkan_train_config** out) {
    if (auto s = require_arg(out != nullptr, "out must be non-NULL")) return s;
    *out = new tkan_train_config();
    return TKAN_OK;
}

tkan_status tkan_train_config_set(tkan_train_config* cfg, const char* key, const char* value) {
    if (auto s = require_arg(cfg && key && value, "cfg, key and value must be non-NULL"))
        return s;
    return wrap([&] {
        tkan::require(tkan::apply_train_kv(cfg->cfg, key, value),
                      tkan::ErrorCode::invalid_argument,
                      std::string("unknown train config key '") + key + "'");
    });
}

const char* tkan_train_config_describe(tkan_train_config* cfg) {
    if (!cfg) return "";
    cfg->buf = tkan::describe(cfg->cfg);
    return cfg->buf.c_str();
}

void tkan_train_config_free(tkan_train_config* cfg) { delete cfg; }

tkan_status tkan_config_load_file(tkan_model_config* model_cfg, tkan_train_config* train_cfg,
                                  const char* path) {
    if (auto s = require_arg(path != nullptr, "path must be non-NULL")) return s;
    return wrap([&] {
        tkan::load_config_file(path, model_cfg ? &model_cfg->cfg : nullptr,
                               train_cfg ? &train_cfg->cfg : nullptr);
    });
}

/* ------------------------------------------------------------------ */
/* Models                                                              */
/* ------------------------------------------------------------------ */

tkan_status tkan_model_create(const tkan_model_config* cfg, uint64_t seed, tkan_model** out) {
    if (auto s = require_arg(cfg && out, "cfg and out must be non-NULL")) return s;
    return wrap([&] { *out = new tkan_model{tkan::Forecaster(cfg->cfg, seed), {}}; });
}

tkan_status tkan_model_load(const char* path, tkan_model** out) {
    if (auto s = require_arg(path && out, "path and out must be non-NULL")) return s;
    return wrap([&] { *out = new tkan_model{tkan::load_checkpoint(path), {}}; });
}

tkan_status tkan_model_save(const tkan_model* model, const char* path) {
    if (auto s = require_arg(model && path, "model and path must be non-NULL")) return s;
    return wrap([&] { tkan::save_checkpoint(model->model, path); });
}

size_t tkan_model_param_count(const tkan_model* model) {
    return model ? model->model.param_count() : 0;
}

const char* tkan_model_variant(const tkan_model* model) {
    return model ? tkan::variant_name(model->model.config().variant) : "";
}

const char* tkan_model_describe(tkan_model* model) {
    if (!model) return "";
    model->buf = tkan::describe(model->model.config());
    return model->buf.c_str();
}

int tkan_model_window(const tkan_model* model) {
    return model ? model->model.config().window : 0;
}

void tkan_model_free(tkan_model* model) { delete model; }

size_t tkan_model_kan_layer_count(const tkan_model* model) {
    return model ? model->model.kan_layer_count() : 0;
}

tkan_status tkan_model_kan_layer_dims(const tkan_model* model, size_t layer, size_t* in_dim,
                                      size_t* out_dim) {
    if (auto s = require_arg(model && in_dim && out_dim, "arguments must be non-NULL")) return s;
    return wrap([&] {
        const tkan::KanLayer& l = model->model.kan_layer(layer);
        *in_dim = static_cast<size_t>(l.in_dim());
        *out_dim = static_cast<size_t>(l.out_dim());
    });
}

tkan_status tkan_model_grid_domain(const tkan_model* model, double* lo, double* hi) {
    if (auto s = require_arg(model && lo && hi, "arguments must be non-NULL")) return s;
    *lo = model->model.config().grid.lo;
    *hi = model->model.config().grid.hi;
    return TKAN_OK;
}

tkan_status tkan_model_eval_edge(const tkan_model* model, size_t layer, size_t out_idx,
                                 size_t in_idx, const double* xs, size_t n, double* phis) {
    if (auto s = require_arg(model && xs && phis, "arguments must be non-NULL")) return s;
    return wrap([&] {
        const tkan::KanLayer& l = model->model.kan_layer(layer);
        const tkan::KanEdge edge =
            l.edge(static_cast<int>(out_idx), static_cast<int>(in_idx));
        for (size_t i = 0; i < n; ++i) phis[i] = tkan::eval_edge(edge, xs[i]);
    });
}

/* ------------------------------------------------------------------ */
/* Training                                                            */
/* ------------------------------------------------------------------ */

tkan_status tkan_train(tkan_model* model, const tkan_dataset* data,
                       const tkan_train_config* cfg, tkan_train_report** out) {
    if (auto s = require_arg(model && data && cfg && out, "arguments must be non-NULL"))
        return s;
    return wrap([&] {
        const auto windows = tkan::make_windows(data->data, model->model.config().window);
        auto [train_split, valid_split] =
            tkan::split_windows(windows, 1.0 - cfg->cfg.valid_fraction);
        auto report = std::make_unique<tkan_train_report>();
        report->report = tkan::train(model->model, train_split, valid_split, cfg->cfg);
        *out = report.release();
    });
}

size_t tkan_train_report_epochs(const tkan_train_report* report) {
    return report ? report->report.epochs.size() : 0;
}

tkan_status tkan_train_report_row(const tkan_train_report* report, size_t epoch,
                                  double* train_loss, double* valid_loss, double* valid_f1) {
    if (auto s = require_arg(report != nullptr, "report must be non-NULL")) return s;
    if (epoch >= report->report.epochs.size()) {
        set_last_error("epoch index out of range");
        return TKAN_ERR_OUT_OF_RANGE;
    }
    const tkan::EpochRow& row = report->report.epochs[epoch];
    if (train_loss) *train_loss = row.train_loss;
    if (valid_loss) *valid_loss = row.valid_loss;
    if (valid_f1) *valid_f1 = row.valid_f1;
    return TKAN_OK;
}

int tkan_train_report_best_epoch(const tkan_train_report* report) {
    return report ? report->report.best_epoch : -1;
}

double tkan_train_report_best_f1(const tkan_train_report* report) {
    return report ? report->report.best_f1 : 0.0;
}

double tkan_train_report_wall_seconds(const tkan_train_report* report) {
    return report ? report->report.wall_seconds : 0.0;
}

void tkan_train_report_free(tkan_train_report* report) { delete report; }

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */
/* ------------------------------------------------------------------ */

tkan_status tkan_evaluate(const tkan_model* model, const tkan_dataset* data,
                          const int* horizons, size_t n_horizons, tkan_eval_result** out) {
    if (auto s = require_arg(model && data && horizons && out && n_horizons > 0,
                             "arguments must be non-NULL and at least one horizon requested"))
        return s;
    return wrap([&] {
        const auto windows = tkan::make_windows(data->data, model->model.config().window);
        const auto preds = tkan::predict_all(model->model, windows);

        std::vector<double> mids = tkan::dataset_mids(data->data);
        bool mids_usable = !mids.empty();
        for (double m : mids)
            if (!std::isfinite(m) || m <= 0.0) {
                mids_usable = false;
                break;
            }

        auto result = std::make_unique<tkan_eval_result>();
        result->samples = windows.size();
        for (size_t h = 0; h < n_horizons; ++h) {
            const int k = horizons[h];
            std::vector<int> truth(windows.size()), cls(windows.size());
            for (size_t i = 0; i < windows.size(); ++i) {
                truth[i] = windows[i].label(k);
                cls[i] = preds[i].cls;
            }
            HorizonEval he;
            he.metrics = tkan::metrics(tkan::confusion_from_pairs(truth, cls));
            if (mids_usable) {
                std::vector<double> signal, realized;
                for (size_t i = 0; i < windows.size(); ++i) {
                    const size_t e = windows[i].end_index;
                    if (e + k >= mids.size()) continue;
                    signal.push_back(preds[i].probs[0] - preds[i].probs[2]);
                    realized.push_back((mids[e + k] - mids[e]) / mids[e]);
                }
                try {
                    he.ic = tkan::information_coefficient(signal, realized);
                } catch (const tkan::Error&) {
                    // Constant signal or too few points; report NaN for this
                    // reporting surface rather than aborting the evaluation.
                }
            }
            result->by_horizon[k] = he;
        }
        *out = result.release();
    });
}

tkan_status tkan_eval_metrics(const tkan_eval_result* result, int horizon, double precision[3],
                              double recall[3], double f1[3], double* macro_precision,
                              double* macro_recall, double* macro_f1) {
    if (auto s = require_arg(result != nullptr, "result must be non-NULL")) return s;
    const auto it = result->by_horizon.find(horizon);
    if (it == result->by_horizon.end()) {
        set_last_error("horizon was not part of this evaluation");
        return TKAN_ERR_MISSING_HORIZON;
    }
    const tkan::MetricsReport& m = it->second.metrics;
    for (int c = 0; c < 3; ++c) {
        if (precision) precision[c] = m.per_class[c].precision;
        if (recall) recall[c] = m.per_class[c].recall;
        if (f1) f1[c] = m.per_class[c].f1;
    }
    if (macro_precision) *macro_precision = m.macro_precision;
    if (macro_recall) *macro_recall = m.macro_recall;
    if (macro_f1) *macro_f1 = m.macro_f1;
    return TKAN_OK;
}

tkan_status tkan_eval_ic(const tkan_eval_result* result, int horizon, double* ic) {
    if (auto s = require_arg(result && ic, "result and ic must be non-NULL")) return s;
    const auto it = result->by_horizon.find(horizon);
    if (it == result->by_horizon.end()) {
        set_last_error("horizon was not part of this evaluation");
        return TKAN_ERR_MISSING_HORIZON;
    }
    *ic = it->second.ic;
    return TKAN_OK;
}

size_t tkan_eval_sample_count(const tkan_eval_result* result) {
    return result ? result->samples : 0;
}

void tkan_eval_result_free(tkan_eval_result* result) { delete result; }

/* ------------------------------------------------------------------ */
/* Backtest                                                            */
/* ------------------------------------------------------------------ */

tkan_status tkan_run_backtest(const tkan_model* model, const tkan_dataset* data,
                              double cost_bps, tkan_backtest_result** out) {
    if (auto s = require_arg(model && data && out, "arguments must be non-NULL")) return s;
    return wrap([&] {
        const auto windows = tkan::make_windows(data->data, model->model.config().window);
        const std::vector<double> mids = tkan::dataset_mids(data->data);
        tkan::BacktestConfig cfg;
        cfg.cost_bps = cost_bps;
        auto result = std::make_unique<tkan_backtest_result>();
        result->ledger = tkan::model_backtest(model->model, windows, mids, cfg);
        *out = result.release();
    });
}

size_t tkan_backtest_steps(const tkan_backtest_result* result) {
    return result ? result->ledger.rows.size() : 0;
}

tkan_status tkan_backtest_row(const tkan_backtest_result* result, size_t step, double* mid,
                              int* position, double* step_return, double* cum_return) {
    if (auto s = require_arg(result != nullptr, "result must be non-NULL")) return s;
    if (step >= result->ledger.rows.size()) {
        set_last_error("backtest step out of range");
        return TKAN_ERR_OUT_OF_RANGE;
    }
    const tkan::LedgerRow& row = result->ledger.rows[step];
    if (mid) *mid = row.mid;
    if (position) *position = row.position;
    if (step_return) *step_return = row.step_return;
    if (cum_return) *cum_return = row.cum_return;
    return TKAN_OK;
}

double tkan_backtest_terminal_return_pct(const tkan_backtest_result* result) {
    return result ? result->ledger.terminal_return_pct : 0.0;
}

void tkan_backtest_result_free(tkan_backtest_result* result) { delete result; }

}  // extern "C"
