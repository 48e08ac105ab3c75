/* Drives the full pipeline through the C API alone: generate a corpus,
 * train a small model, forecast, inspect the results, and evaluate. Exits
 * nonzero with a message on the first failed expectation. */
#include "groupcast.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static const char* g_root = NULL;

static char path_buf[8][1024];
static int path_slot = 0;

static const char* path(const char* name) {
    char* buf = path_buf[path_slot];
    path_slot = (path_slot + 1) % 8;
    snprintf(buf, sizeof(path_buf[0]), "%s/%s", g_root, name);
    return buf;
}

static void expect(int ok, const char* what) {
    if (!ok) {
        fprintf(stderr, "capi check failed: %s (last error: %s)\n", what, gc_last_error());
        exit(1);
    }
}

int main(int argc, char** argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s <scratch dir>\n", argv[0]);
        return 2;
    }
    g_root = argv[1];

    expect(strlen(gc_version()) > 0, "version string");
    expect(gc_model_load(path("missing.gcpt")) == NULL, "loading a missing model fails");
    expect(strlen(gc_last_error()) > 0, "failure sets an error message");

    char set_out[1100];
    snprintf(set_out, sizeof(set_out), "generate.out=%s", path("tasks.jsonl"));
    const char* gen_overrides[] = {
        set_out,
        "generate.n_tasks=5",
        "generate.seed=3",
        "generate.min_history=16",
        "generate.max_history=24",
        "generate.min_horizon=4",
        "generate.max_horizon=6",
        "generate.min_dims=2",
        "generate.max_dims=3",
    };
    expect(gc_cmd_generate(NULL, gen_overrides, 9) == 0, "generate command");

    gc_dataset* dataset = gc_dataset_load(path("tasks.jsonl"));
    expect(dataset != NULL, "dataset loads");
    expect(gc_dataset_count(dataset) == 5, "dataset holds 5 tasks");
    expect(gc_dataset_task_id(dataset, 0) != NULL, "task id accessor");
    expect(gc_dataset_task_id(dataset, 99) == NULL, "out-of-range task id fails");
    expect(gc_dataset_save(dataset, path("copy.jsonl")) == 0, "dataset saves");

    char set_run[1100], set_data[1100];
    snprintf(set_run, sizeof(set_run), "train.run_dir=%s", path("run"));
    snprintf(set_data, sizeof(set_data), "train.data=%s", path("tasks.jsonl"));
    const char* train_overrides[] = {
        set_run,
        set_data,
        "train.model.patch_len=4",
        "train.model.d_model=16",
        "train.model.n_blocks=1",
        "train.model.n_heads=2",
        "train.model.max_context=64",
        "train.model.max_output_patches=4",
        "train.schedule.stage1_context=32",
        "train.schedule.stage2_context=48",
        "train.schedule.stage1_steps=3",
        "train.schedule.stage2_steps=3",
        "train.schedule.stage1_max_output_patches=2",
        "train.schedule.stage2_max_output_patches=4",
        "train.schedule.batch_tasks=2",
    };
    expect(gc_cmd_train(NULL, train_overrides, 15) == 0, "train command");

    gc_model* model = gc_model_load(path("run/ckpt-final.gcpt"));
    expect(model != NULL, "checkpoint loads");
    expect(gc_model_param_count(model) > 1000, "model has parameters");
    expect(gc_model_max_horizon(model) == 16, "horizon limit is patches times patch length");
    expect(gc_model_save(model, path("weights.gcpt")) == 0, "model saves");

    expect(gc_forecast_run(model, dataset, "banana") == NULL, "bad mode fails");
    gc_forecasts* forecasts = gc_forecast_run(model, dataset, "univariate");
    expect(forecasts != NULL, "forecast runs");
    expect(gc_forecasts_count(forecasts) == 5, "one forecast per task");

    int horizon = 0, dims = 0, n_levels = 0;
    expect(gc_forecast_dims(forecasts, 0, &horizon, &dims, &n_levels) == 0, "dims accessor");
    expect(horizon >= 4 && horizon <= 6, "forecast horizon in the corpus range");
    expect(dims >= 1, "forecast has dimensions");
    expect(n_levels == 21, "default quantile grid");

    double levels[32];
    expect(gc_forecast_levels(forecasts, 0, levels, 32) == n_levels, "levels accessor");
    expect(levels[10] == 0.5, "median level sits at the grid center");

    int64_t needed = gc_forecast_values(forecasts, 0, NULL, 0);
    expect(needed == (int64_t)horizon * dims * n_levels, "value count matches the shape");
    double* values = malloc((size_t)needed * sizeof(double));
    expect(gc_forecast_values(forecasts, 0, values, needed) == needed, "values copy out");
    for (int64_t i = 0; i < needed; ++i)
        expect(isfinite(values[i]), "forecast values are finite");
    for (int s = 0; s < horizon; ++s)
        for (int d = 0; d < dims; ++d)
            for (int q = 1; q < n_levels; ++q) {
                const double* slice = values + ((int64_t)s * dims + d) * n_levels;
                expect(slice[q] >= slice[q - 1], "quantiles are monotone");
            }
    free(values);

    expect(gc_forecasts_save(forecasts, path("fc.jsonl")) == 0, "forecasts save");
    gc_forecasts* reloaded = gc_forecasts_load(path("fc.jsonl"));
    expect(reloaded != NULL, "forecasts reload");
    expect(gc_forecasts_count(reloaded) == 5, "reload keeps the count");
    expect(strcmp(gc_forecast_task_id(reloaded, 2), gc_forecast_task_id(forecasts, 2)) == 0,
           "reload keeps task ids");

    expect(gc_evaluate(reloaded, dataset, path("eval"), 20, 0) == 0, "evaluate");
    FILE* summary = fopen(path("eval/summary.csv"), "r");
    expect(summary != NULL, "summary.csv exists");
    fclose(summary);

    gc_forecasts_free(forecasts);
    gc_forecasts_free(reloaded);
    gc_model_free(model);
    gc_dataset_free(dataset);
    printf("capi check passed\n");
    return 0;
}
