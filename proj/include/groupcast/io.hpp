#pragma once

#include "groupcast/data_model.hpp"
#include "groupcast/inference.hpp"
#include "groupcast/model.hpp"
#include "groupcast/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace groupcast::io {

// Dataset files are JSON-Lines, one task per line:
//   {"task_id": str, "freq": str, "horizon": int, "columns": [
//      {"name": str, "role": "target"|"past_covariate"|"known_covariate"|"static",
//       "dtype": "real"|"categorical", "values": [...]}]}
// Missing observations are null. Dynamic columns span T+H steps; the last H
// entries of a target column are its held-out ground truth (all-null there
// means no ground truth). Static columns carry a single value and are
// broadcast to a constant known covariate. A lone categorical covariate
// next to a single target is target-encoded (smoothing weight 10);
// otherwise categoricals get ordinal codes.
std::vector<data::ForecastTask> load_tasks(const std::string& path);
void save_tasks(const std::vector<data::ForecastTask>& tasks, const std::string& path);

// Forecast files are JSON-Lines, one record per task:
//   {"task_id": str, "levels": [...], "forecast": [[[v per level] per dim] per step]}
void save_forecasts(const std::vector<infer::QuantileForecast>& forecasts,
                    const std::string& path);
std::vector<infer::QuantileForecast> load_forecasts(const std::string& path);

// Checkpoints hold the model config, a named-parameter manifest, and the
// raw little-endian 64-bit payload, plus optimizer moments and the next
// curriculum step when saved mid-training. Loading validates every shape
// against a fresh parameter set built from the stored config.
struct Checkpoint {
    model::ModelConfig config;
    model::Parameters params;
    std::optional<training::OptimizerState> optimizer;
    // Next curriculum step to run; absent for inference-only checkpoints.
    std::optional<int> next_step;
};

void save_checkpoint(const std::string& path, const model::ModelConfig& config,
                     const model::Parameters& params,
                     const training::OptimizerState* optimizer = nullptr,
                     const int* next_step = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace groupcast::io
