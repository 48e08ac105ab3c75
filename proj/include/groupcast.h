/* C interface to the groupcast forecasting library.
 *
 * Every handle is opaque and owned by the caller until passed to its _free
 * function. Functions that return a pointer return NULL on failure;
 * functions that return int return 0 on success and -1 on failure (the
 * gc_cmd_* one-shots return a process exit code instead). After any
 * failure, gc_last_error() describes what went wrong.
 */
#ifndef GROUPCAST_H
#define GROUPCAST_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct gc_dataset gc_dataset;     /* a list of forecasting tasks */
typedef struct gc_model gc_model;         /* model config plus trained weights */
typedef struct gc_forecasts gc_forecasts; /* quantile forecasts, one per task */

/* Message for the most recent failure on the calling thread, or an empty
 * string. The pointer stays valid until the next failing call on the same
 * thread. */
const char* gc_last_error(void);

/* Library version as "major.minor.patch". */
const char* gc_version(void);

/* Datasets are JSON-Lines files, one task per line. */
gc_dataset* gc_dataset_load(const char* path);
int gc_dataset_save(const gc_dataset* dataset, const char* path);
int gc_dataset_count(const gc_dataset* dataset);
const char* gc_dataset_task_id(const gc_dataset* dataset, int index);
void gc_dataset_free(gc_dataset* dataset);

/* Models are checkpoint files written by training (or gc_model_save). */
gc_model* gc_model_load(const char* path);
int gc_model_save(const gc_model* model, const char* path);
int64_t gc_model_param_count(const gc_model* model);
/* Longest forecast horizon the model can emit in one pass. */
int gc_model_max_horizon(const gc_model* model);
void gc_model_free(gc_model* model);

/* Forecasts every task in the dataset. `mode` is one of "univariate",
 * "multivariate", "covariates", or "cross". */
gc_forecasts* gc_forecast_run(const gc_model* model, const gc_dataset* dataset,
                              const char* mode);

gc_forecasts* gc_forecasts_load(const char* path);
int gc_forecasts_save(const gc_forecasts* forecasts, const char* path);
int gc_forecasts_count(const gc_forecasts* forecasts);
const char* gc_forecast_task_id(const gc_forecasts* forecasts, int index);
/* Shape of one forecast: steps, series dimensions, and quantile levels.
 * Any of the out pointers may be NULL. */
int gc_forecast_dims(const gc_forecasts* forecasts, int index, int* horizon, int* dims,
                     int* n_levels);
/* Copies the quantile levels (ascending) into `out` when capacity allows;
 * returns the number of levels, or -1 on a bad handle or index. */
int64_t gc_forecast_levels(const gc_forecasts* forecasts, int index, double* out,
                           int64_t capacity);
/* Copies the forecast values, laid out as value[step][dim][level], into
 * `out` when capacity allows; returns horizon*dims*n_levels, or -1 on a
 * bad handle or index. */
int64_t gc_forecast_values(const gc_forecasts* forecasts, int index, double* out,
                           int64_t capacity);
void gc_forecasts_free(gc_forecasts* forecasts);

/* Scores forecasts against the dataset's held-out ground truth alongside a
 * seasonal-naive baseline and writes results.csv and summary.csv into
 * out_dir. `bootstrap` > 0 adds that many resamples of confidence
 * interval. */
int gc_evaluate(const gc_forecasts* forecasts, const gc_dataset* dataset,
                const char* out_dir, int bootstrap, uint64_t seed);

/* One-shot pipeline commands, mirroring the CLI. `config_path` may be NULL
 * or empty; `overrides` holds n_overrides strings of the form
 * "section.key=value". The return value is a process exit code: 0 success,
 * 1 runtime failure, 2 configuration error. */
int gc_cmd_generate(const char* config_path, const char* const* overrides, int n_overrides);
int gc_cmd_train(const char* config_path, const char* const* overrides, int n_overrides);
int gc_cmd_forecast(const char* config_path, const char* const* overrides, int n_overrides);
int gc_cmd_evaluate(const char* config_path, const char* const* overrides, int n_overrides);

#ifdef __cplusplus
}
#endif

#endif /* GROUPCAST_H */
