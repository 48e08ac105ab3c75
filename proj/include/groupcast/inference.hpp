#pragma once

#include "groupcast/data_model.hpp"
#include "groupcast/model.hpp"
#include "groupcast/tokenizer.hpp"

#include <string>
#include <vector>

namespace groupcast::infer {

// De-normalized quantile predictions for one task. `values` is laid out
// (step, dimension, level), row-major.
struct QuantileForecast {
    std::string task_id;
    int horizon = 0;
    int dims = 0;
    std::vector<double> levels;
    std::vector<double> values;
    // Per-dimension scaling fitted on the context; kept for diagnostics.
    std::vector<tokenizer::NormalizationState> norms;

    double at(int step, int dim, int level) const {
        return values[(static_cast<size_t>(step) * dims + dim) * levels.size() + level];
    }
    double& at(int step, int dim, int level) {
        return values[(static_cast<size_t>(step) * dims + dim) * levels.size() + level];
    }
};

// Sorts each (step, dimension) quantile vector in place, removing any
// crossings the head may emit. Applied to every forecast before it leaves
// this module; training sees the raw head output.
QuantileForecast enforce_quantile_monotonicity(QuantileForecast raw);

// Extracts the 0.5-level slice as an H x D matrix. Throws when the forecast
// was produced without a median level.
Matrix point_forecast(const QuantileForecast& forecast);

// Runs the full pipeline for a batch of tasks: assembles rows per `mode`,
// tokenizes, runs the encoder and quantile head, de-normalizes, and sorts
// the quantile axis. Returns one forecast per task, in task order.
//
// Contexts longer than the model maximum are truncated to the most recent
// window. Horizons beyond the output patch budget are rejected. In
// full_cross_learning mode every row shares one group, so any row of any
// task can influence any other.
std::vector<QuantileForecast> forecast(const std::vector<data::ForecastTask>& tasks,
                                       const model::Parameters& params,
                                       const model::ModelConfig& config,
                                       data::InferenceMode mode);

}  // namespace groupcast::infer
