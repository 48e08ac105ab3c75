#include "groupcast/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace groupcast::infer {

QuantileForecast enforce_quantile_monotonicity(QuantileForecast raw) {
    const int nq = static_cast<int>(raw.levels.size());
    for (int s = 0; s < raw.horizon; ++s)
        for (int d = 0; d < raw.dims; ++d) {
            double* lo = &raw.at(s, d, 0);
            std::sort(lo, lo + nq);
        }
    return raw;
}

Matrix point_forecast(const QuantileForecast& forecast) {
    const auto it = std::find(forecast.levels.begin(), forecast.levels.end(), 0.5);
    if (it == forecast.levels.end())
        throw Error("point forecast needs the 0.5 level, which this forecast lacks");
    const int q = static_cast<int>(it - forecast.levels.begin());

    Matrix median(forecast.horizon, forecast.dims);
    for (int s = 0; s < forecast.horizon; ++s)
        for (int d = 0; d < forecast.dims; ++d) median.at(s, d) = forecast.at(s, d, q);
    return median;
}

namespace {

// Keeps only the most recent `keep` history steps of a task. Covariate rows
// are trimmed from the front so the T+H alignment is preserved.
data::ForecastTask truncate_context(const data::ForecastTask& task, int keep) {
    data::ForecastTask out = task;
    const int t = task.targets.rows();
    const int drop = t - keep;

    out.targets = Matrix(keep, task.targets.cols());
    for (int i = 0; i < keep; ++i)
        for (int d = 0; d < task.targets.cols(); ++d)
            out.targets.at(i, d) = task.targets.at(drop + i, d);

    if (task.covariates.cols() > 0) {
        out.covariates = Matrix(keep + task.horizon, task.covariates.cols());
        for (int i = 0; i < keep + task.horizon; ++i)
            for (int m = 0; m < task.covariates.cols(); ++m)
                out.covariates.at(i, m) = task.covariates.at(drop + i, m);
    }
    return out;
}

}  // namespace

std::vector<QuantileForecast> forecast(const std::vector<data::ForecastTask>& tasks,
                                       const model::Parameters& params,
                                       const model::ModelConfig& config,
                                       data::InferenceMode mode) {
    const int max_h = config.max_output_patches * config.patch_len;
    std::vector<data::ForecastTask> prepared;
    prepared.reserve(tasks.size());
    for (const auto& task : tasks) {
        if (task.horizon > max_h)
            throw Error("task " + task.task_id + " horizon " + std::to_string(task.horizon) +
                        " exceeds the model limit of " + std::to_string(max_h) + " steps");
        if (task.targets.rows() > config.max_context)
            prepared.push_back(truncate_context(task, config.max_context));
        else
            prepared.push_back(task);
    }

    const auto batch = data::assemble_batch(prepared, mode);
    const auto result = model::forward(batch, params, config);

    std::vector<QuantileForecast> forecasts(tasks.size());
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        auto& fc = forecasts[ti];
        fc.task_id = tasks[ti].task_id;
        fc.horizon = tasks[ti].horizon;
        fc.dims = tasks[ti].targets.cols();
        fc.levels = config.quantile_levels;
        fc.values.assign(
            static_cast<size_t>(fc.horizon) * fc.dims * fc.levels.size(), 0.0);
        fc.norms.resize(static_cast<size_t>(fc.dims));
    }

    const int nq = config.n_quantiles();
    const int n_steps = result.predictions.dim(1);
    const auto& pred = result.predictions.values();
    for (size_t r = 0; r < batch.rows.size(); ++r) {
        const auto& row = batch.rows[r];
        if (row.role != data::Role::target) continue;
        auto& fc = forecasts[static_cast<size_t>(row.task_index)];
        const auto& norm = result.row_norms[r];
        fc.norms[static_cast<size_t>(row.dim_index)] = norm;
        for (int s = 0; s < fc.horizon; ++s)
            for (int q = 0; q < nq; ++q) {
                const double z =
                    pred[(r * static_cast<size_t>(n_steps) + s) * nq + static_cast<size_t>(q)];
                fc.at(s, row.dim_index, q) =
                    tokenizer::denormalize_quantile(z, norm.mu[0], norm.sigma[0]);
            }
    }

    for (auto& fc : forecasts) fc = enforce_quantile_monotonicity(std::move(fc));
    return forecasts;
}

}  // namespace groupcast::infer
