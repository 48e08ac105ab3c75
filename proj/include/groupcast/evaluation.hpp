#pragma once

#include "groupcast/data_model.hpp"
#include "groupcast/inference.hpp"

#include <map>
#include <string>
#include <vector>

namespace groupcast::eval {

// All metrics treat lower as better and throw on degenerate denominators.
// Missing actual steps are excluded from numerator and denominator alike.

// 2 * sum of pinball losses over steps, dims, levels, divided by
// (|Q| * sum |y|). Scale-free. Throws "undefined normalization" when the
// actuals sum to zero in absolute value.
double wql(const infer::QuantileForecast& forecast, const Matrix& actuals);

// Mean absolute error of a point forecast divided by the in-sample mean
// absolute seasonal difference |y_t - y_{t-m}|. Throws "constant seasonal
// history" when the scaling term vanishes.
double mase(const Matrix& point, const Matrix& actuals, const Matrix& history, int season);

// Sum |y - yhat| / sum |y|.
double wape(const Matrix& point, const Matrix& actuals);

// Mean pinball loss over steps, dims, and levels divided by the same
// seasonal scaling term as `mase`.
double sql(const infer::QuantileForecast& forecast, const Matrix& actuals,
           const Matrix& history, int season);

// Season length for a frequency string: hourly 24, half-hourly 48,
// quarter-hourly 96, daily 7, weekly 52, monthly 12, anything else 1.
int season_for_freq(const std::string& freq);

// Repeats the last observed season (last value when the history is shorter
// than one season). Every quantile level carries the point value.
infer::QuantileForecast seasonal_naive(const Matrix& history, int season, int horizon,
                                       const std::vector<double>& levels);

// Scores one forecast against the task's held-out ground truth with all
// four metrics, using the season implied by the task frequency. Keys:
// "wql", "mase", "wape", "sql".
std::map<std::string, double> score_forecast(const infer::QuantileForecast& forecast,
                                             const data::ForecastTask& task);

struct TaskResult {
    std::string task_id;
    // model name -> metric name -> score
    std::map<std::string, std::map<std::string, double>> scores;
};

struct ModelSummary {
    std::string model;
    double win_rate = 0.0;  // percent of pairwise comparisons won, ties count half
    double skill = 0.0;     // percent improvement of the geomean ratio vs the baseline
    int skill_tasks = 0;    // tasks entering the skill geomean
    // Bootstrap percentile bounds; equal to the point values when the
    // bootstrap is disabled.
    double win_rate_lo = 0.0, win_rate_hi = 0.0;
    double skill_lo = 0.0, skill_hi = 0.0;
};

struct BenchmarkSummary {
    std::string metric;
    std::string baseline;
    std::vector<ModelSummary> models;
    std::vector<std::string> warnings;
};

// Pools one metric across tasks. Win rate counts every (task, opponent)
// comparison with ties worth 0.5; a lone model scores 50 by convention.
// Skill is 100 * (1 - geomean over tasks of model/baseline), computed in
// log space with ratios clipped below at 1e-9; tasks where the baseline
// scores 0 are dropped with a warning. `bootstrap` > 0 resamples tasks
// that many times and reports the 2.5/97.5 percentiles.
BenchmarkSummary aggregate(const std::vector<TaskResult>& results, const std::string& metric,
                           const std::string& baseline, int bootstrap = 0, uint64_t seed = 0);

// CSV writers: one row per (task, model, metric) score, and one row per
// (model, metric) summary.
void write_results_csv(const std::vector<TaskResult>& results, const std::string& path);
void write_summary_csv(const std::vector<BenchmarkSummary>& summaries, const std::string& path);

}  // namespace groupcast::eval
