/* C API for the T-KAN limit-order-book forecasting library.
 *
 * All objects are opaque handles created and released by matching
 * tkan_*_free calls. Functions return TKAN_OK on success; on failure the
 * thread-local message from tkan_last_error() describes what went wrong.
 * Pointers returned by const char* getters stay valid until the next call
 * on the same handle (or tkan_last_error on the same thread).
 */
#ifndef TKAN_TKAN_H
#define TKAN_TKAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tkan_status {
    TKAN_OK = 0,
    TKAN_ERR_INVALID_ARGUMENT = 1,
    TKAN_ERR_DIMENSION = 2,
    TKAN_ERR_PARSE = 3,
    TKAN_ERR_IO = 4,
    TKAN_ERR_CORRUPT = 5,
    TKAN_ERR_VERSION = 6,
    TKAN_ERR_SHAPE = 7,
    TKAN_ERR_DIVERGENCE = 8,
    TKAN_ERR_NOT_FINITE = 9,
    TKAN_ERR_OUT_OF_RANGE = 10,
    TKAN_ERR_MISSING_HORIZON = 11,
    TKAN_ERR_EMPTY = 12,
    TKAN_ERR_INTERNAL = 13
} tkan_status;

const char* tkan_version(void);
/* Message of the most recent failure on this thread; never NULL. */
const char* tkan_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */
/* ------------------------------------------------------------------ */

typedef struct tkan_dataset tkan_dataset;

typedef enum tkan_layout {
    TKAN_ROWS_ARE_SAMPLES = 0,
    TKAN_ROWS_ARE_FEATURES = 1
} tkan_layout;

/* FI-2010-format numeric text: 149 fields per sample (144 features plus
 * labels in {1,2,3} for horizons 10/20/30/50/100). */
tkan_status tkan_dataset_load_fi2010(const char* path, tkan_layout layout,
                                     tkan_dataset** out);
/* Synthetic LOB series (mid-price walk with momentum regimes). */
tkan_status tkan_dataset_synthetic(uint64_t seed, size_t n, tkan_dataset** out);
tkan_status tkan_dataset_load_cache(const char* path, tkan_dataset** out);
tkan_status tkan_dataset_save_cache(const tkan_dataset* data, const char* path);
/* Fits per-feature z-score stats on the leading train_fraction of snapshots
 * and standardizes the whole set in place. Returns the number of
 * constant features (sigma fallback 1) through out_constant when non-NULL. */
tkan_status tkan_dataset_zscore(tkan_dataset* data, double train_fraction,
                                size_t* out_constant);
size_t tkan_dataset_size(const tkan_dataset* data);
uint64_t tkan_dataset_fingerprint(const tkan_dataset* data);
void tkan_dataset_free(tkan_dataset* data);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */
/* ------------------------------------------------------------------ */

typedef struct tkan_model_config tkan_model_config;
typedef struct tkan_train_config tkan_train_config;

/* variant: "tkan_head", "tkan_gated" or "deeplob_lite". */
tkan_status tkan_model_config_create(const char* variant, tkan_model_config** out);
tkan_status tkan_model_config_set(tkan_model_config* cfg, const char* key, const char* value);
const char* tkan_model_config_describe(tkan_model_config* cfg);
void tkan_model_config_free(tkan_model_config* cfg);

tkan_status tkan_train_config_create(tkan_train_config** out);
tkan_status tkan_train_config_set(tkan_train_config* cfg, const char* key, const char* value);
const char* tkan_train_config_describe(tkan_train_config* cfg);
void tkan_train_config_free(tkan_train_config* cfg);

/* key=value file; model keys and train keys may be mixed freely. */
tkan_status tkan_config_load_file(tkan_model_config* model_cfg, tkan_train_config* train_cfg,
                                  const char* path);

/* ------------------------------------------------------------------ */
/* Models                                                              */
/* ------------------------------------------------------------------ */

typedef struct tkan_model tkan_model;

tkan_status tkan_model_create(const tkan_model_config* cfg, uint64_t seed, tkan_model** out);
tkan_status tkan_model_load(const char* path, tkan_model** out);
tkan_status tkan_model_save(const tkan_model* model, const char* path);
size_t tkan_model_param_count(const tkan_model* model);
const char* tkan_model_variant(const tkan_model* model);
const char* tkan_model_describe(tkan_model* model);
int tkan_model_window(const tkan_model* model);
void tkan_model_free(tkan_model* model);

/* KAN layer inspection (learned activation export). Layers are numbered in
 * registry order; edge (out_idx, in_idx) is evaluated at the given points. */
size_t tkan_model_kan_layer_count(const tkan_model* model);
tkan_status tkan_model_kan_layer_dims(const tkan_model* model, size_t layer, size_t* in_dim,
                                      size_t* out_dim);
tkan_status tkan_model_grid_domain(const tkan_model* model, double* lo, double* hi);
tkan_status tkan_model_eval_edge(const tkan_model* model, size_t layer, size_t out_idx,
                                 size_t in_idx, const double* xs, size_t n, double* phis);

/* ------------------------------------------------------------------ */
/* Training                                                            */
/* ------------------------------------------------------------------ */

typedef struct tkan_train_report tkan_train_report;

/* Windows the dataset, splits it train/valid by the configured fraction
 * (contiguous, never shuffled), and trains in place. */
tkan_status tkan_train(tkan_model* model, const tkan_dataset* data,
                       const tkan_train_config* cfg, tkan_train_report** out);
size_t tkan_train_report_epochs(const tkan_train_report* report);
tkan_status tkan_train_report_row(const tkan_train_report* report, size_t epoch,
                                  double* train_loss, double* valid_loss, double* valid_f1);
int tkan_train_report_best_epoch(const tkan_train_report* report);
double tkan_train_report_best_f1(const tkan_train_report* report);
double tkan_train_report_wall_seconds(const tkan_train_report* report);
void tkan_train_report_free(tkan_train_report* report);

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */
/* ------------------------------------------------------------------ */

typedef struct tkan_eval_result tkan_eval_result;

tkan_status tkan_evaluate(const tkan_model* model, const tkan_dataset* data,
                          const int* horizons, size_t n_horizons, tkan_eval_result** out);
/* precision/recall/f1 are 3-vectors (classes up, neutral, down). */
tkan_status tkan_eval_metrics(const tkan_eval_result* result, int horizon, double precision[3],
                              double recall[3], double f1[3], double* macro_precision,
                              double* macro_recall, double* macro_f1);
/* Spearman IC of (p_up - p_down) vs the realized forward return; NaN when no
 * usable mid series exists. */
tkan_status tkan_eval_ic(const tkan_eval_result* result, int horizon, double* ic);
size_t tkan_eval_sample_count(const tkan_eval_result* result);
void tkan_eval_result_free(tkan_eval_result* result);

/* ------------------------------------------------------------------ */
/* Backtest                                                            */
/* ------------------------------------------------------------------ */

typedef struct tkan_backtest_result tkan_backtest_result;

tkan_status tkan_run_backtest(const tkan_model* model, const tkan_dataset* data,
                              double cost_bps, tkan_backtest_result** out);
size_t tkan_backtest_steps(const tkan_backtest_result* result);
tkan_status tkan_backtest_row(const tkan_backtest_result* result, size_t step, double* mid,
                              int* position, double* step_return, double* cum_return);
double tkan_backtest_terminal_return_pct(const tkan_backtest_result* result);
void tkan_backtest_result_free(tkan_backtest_result* result);

#ifdef __cplusplus
}
#endif

#endif /* TKAN_TKAN_H */
