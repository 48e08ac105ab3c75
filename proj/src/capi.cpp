#include "groupcast.h"

#include "groupcast/inference.hpp"
#include "groupcast/io.hpp"
#include "groupcast/runner.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

struct gc_dataset {
    std::vector<groupcast::data::ForecastTask> tasks;
};

struct gc_model {
    groupcast::model::ModelConfig config;
    groupcast::model::Parameters params;
};

struct gc_forecasts {
    std::vector<groupcast::infer::QuantileForecast> items;
};

namespace {

thread_local std::string t_error;

void set_error(const std::string& message) { t_error = message; }

// Runs `fn` and converts exceptions into the C error convention: `fail` for
// pointer-returning calls (nullptr) and int-returning calls (-1).
template <typename Fn, typename Fail>
auto guarded(Fn&& fn, Fail fail) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        set_error(e.what());
        return fail;
    } catch (...) {
        set_error("unknown error");
        return fail;
    }
}

std::vector<std::string> collect_overrides(const char* const* overrides, int n_overrides) {
    std::vector<std::string> out;
    for (int i = 0; i < n_overrides; ++i)
        if (overrides[i]) out.emplace_back(overrides[i]);
    return out;
}

std::string path_or_empty(const char* path) { return path ? std::string(path) : std::string(); }

const groupcast::infer::QuantileForecast* forecast_at(const gc_forecasts* forecasts,
                                                      int index) {
    if (!forecasts || index < 0 || index >= static_cast<int>(forecasts->items.size())) {
        set_error("bad forecasts handle or index");
        return nullptr;
    }
    return &forecasts->items[static_cast<size_t>(index)];
}

}  // namespace

extern "C" {

const char* gc_last_error(void) { return t_error.c_str(); }

const char* gc_version(void) { return "0.1.0"; }

gc_dataset* gc_dataset_load(const char* path) {
    return guarded(
        [&]() -> gc_dataset* {
            if (!path) throw groupcast::Error("path is null");
            return new gc_dataset{groupcast::io::load_tasks(path)};
        },
        static_cast<gc_dataset*>(nullptr));
}

int gc_dataset_save(const gc_dataset* dataset, const char* path) {
    return guarded(
        [&] {
            if (!dataset || !path) throw groupcast::Error("dataset or path is null");
            groupcast::io::save_tasks(dataset->tasks, path);
            return 0;
        },
        -1);
}

int gc_dataset_count(const gc_dataset* dataset) {
    if (!dataset) {
        set_error("dataset is null");
        return -1;
    }
    return static_cast<int>(dataset->tasks.size());
}

const char* gc_dataset_task_id(const gc_dataset* dataset, int index) {
    if (!dataset || index < 0 || index >= static_cast<int>(dataset->tasks.size())) {
        set_error("bad dataset handle or task index");
        return nullptr;
    }
    return dataset->tasks[static_cast<size_t>(index)].task_id.c_str();
}

void gc_dataset_free(gc_dataset* dataset) { delete dataset; }

gc_model* gc_model_load(const char* path) {
    return guarded(
        [&]() -> gc_model* {
            if (!path) throw groupcast::Error("path is null");
            auto ckpt = groupcast::io::load_checkpoint(path);
            return new gc_model{std::move(ckpt.config), std::move(ckpt.params)};
        },
        static_cast<gc_model*>(nullptr));
}

int gc_model_save(const gc_model* model, const char* path) {
    return guarded(
        [&] {
            if (!model || !path) throw groupcast::Error("model or path is null");
            groupcast::io::save_checkpoint(path, model->config, model->params);
            return 0;
        },
        -1);
}

int64_t gc_model_param_count(const gc_model* model) {
    if (!model) {
        set_error("model is null");
        return -1;
    }
    return model->params.scalar_count();
}

int gc_model_max_horizon(const gc_model* model) {
    if (!model) {
        set_error("model is null");
        return -1;
    }
    return model->config.max_output_patches * model->config.patch_len;
}

void gc_model_free(gc_model* model) { delete model; }

gc_forecasts* gc_forecast_run(const gc_model* model, const gc_dataset* dataset,
                              const char* mode) {
    return guarded(
        [&]() -> gc_forecasts* {
            if (!model || !dataset || !mode)
                throw groupcast::Error("model, dataset, or mode is null");
            const auto parsed = groupcast::data::parse_mode(mode);
            return new gc_forecasts{groupcast::infer::forecast(dataset->tasks, model->params,
                                                               model->config, parsed)};
        },
        static_cast<gc_forecasts*>(nullptr));
}

gc_forecasts* gc_forecasts_load(const char* path) {
    return guarded(
        [&]() -> gc_forecasts* {
            if (!path) throw groupcast::Error("path is null");
            return new gc_forecasts{groupcast::io::load_forecasts(path)};
        },
        static_cast<gc_forecasts*>(nullptr));
}

int gc_forecasts_save(const gc_forecasts* forecasts, const char* path) {
    return guarded(
        [&] {
            if (!forecasts || !path) throw groupcast::Error("forecasts or path is null");
            groupcast::io::save_forecasts(forecasts->items, path);
            return 0;
        },
        -1);
}

int gc_forecasts_count(const gc_forecasts* forecasts) {
    if (!forecasts) {
        set_error("forecasts handle is null");
        return -1;
    }
    return static_cast<int>(forecasts->items.size());
}

const char* gc_forecast_task_id(const gc_forecasts* forecasts, int index) {
    const auto* fc = forecast_at(forecasts, index);
    return fc ? fc->task_id.c_str() : nullptr;
}

int gc_forecast_dims(const gc_forecasts* forecasts, int index, int* horizon, int* dims,
                     int* n_levels) {
    const auto* fc = forecast_at(forecasts, index);
    if (!fc) return -1;
    if (horizon) *horizon = fc->horizon;
    if (dims) *dims = fc->dims;
    if (n_levels) *n_levels = static_cast<int>(fc->levels.size());
    return 0;
}

int64_t gc_forecast_levels(const gc_forecasts* forecasts, int index, double* out,
                           int64_t capacity) {
    const auto* fc = forecast_at(forecasts, index);
    if (!fc) return -1;
    const auto needed = static_cast<int64_t>(fc->levels.size());
    if (out && capacity >= needed)
        std::copy(fc->levels.begin(), fc->levels.end(), out);
    return needed;
}

int64_t gc_forecast_values(const gc_forecasts* forecasts, int index, double* out,
                           int64_t capacity) {
    const auto* fc = forecast_at(forecasts, index);
    if (!fc) return -1;
    const auto needed = static_cast<int64_t>(fc->values.size());
    if (out && capacity >= needed)
        std::copy(fc->values.begin(), fc->values.end(), out);
    return needed;
}

void gc_forecasts_free(gc_forecasts* forecasts) { delete forecasts; }

int gc_evaluate(const gc_forecasts* forecasts, const gc_dataset* dataset,
                const char* out_dir, int bootstrap, uint64_t seed) {
    return guarded(
        [&] {
            if (!forecasts || !dataset || !out_dir)
                throw groupcast::Error("forecasts, dataset, or out_dir is null");
            if (bootstrap < 0) throw groupcast::Error("bootstrap must be nonnegative");
            groupcast::run::evaluate_forecasts(dataset->tasks, forecasts->items, out_dir,
                                               bootstrap, seed, "model", "seasonal_naive");
            return 0;
        },
        -1);
}

int gc_cmd_generate(const char* config_path, const char* const* overrides, int n_overrides) {
    return groupcast::run::cmd_generate(path_or_empty(config_path),
                                        collect_overrides(overrides, n_overrides));
}

int gc_cmd_train(const char* config_path, const char* const* overrides, int n_overrides) {
    return groupcast::run::cmd_train(path_or_empty(config_path),
                                     collect_overrides(overrides, n_overrides));
}

int gc_cmd_forecast(const char* config_path, const char* const* overrides, int n_overrides) {
    return groupcast::run::cmd_forecast(path_or_empty(config_path),
                                        collect_overrides(overrides, n_overrides));
}

int gc_cmd_evaluate(const char* config_path, const char* const* overrides, int n_overrides) {
    return groupcast::run::cmd_evaluate(path_or_empty(config_path),
                                        collect_overrides(overrides, n_overrides));
}

}  // extern "C"
