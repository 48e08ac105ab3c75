#pragma once

#include "groupcast/data_model.hpp"
#include "groupcast/evaluation.hpp"
#include "groupcast/inference.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace groupcast::run {

// The four pipeline commands. Each reads its own section of the config file
// (plus "key=value" overrides), writes a resolved-config snapshot next to
// its outputs, and returns a process exit code: 0 success, 1 runtime
// failure, 2 configuration error. An empty config path means defaults plus
// overrides only.

// [generate]: samples a synthetic task corpus to a JSON-Lines dataset with
// a regeneration manifest alongside.
int cmd_generate(const std::string& config_path, const std::vector<std::string>& overrides);

// [train], [train.model], [train.schedule]: runs the two-stage curriculum
// into a run directory (loss log, periodic and final checkpoints). Set
// train.data to a dataset path to train on it instead of the generators;
// train.resume continues from the newest checkpoint in the directory.
int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides);

// [forecast]: loads a checkpoint and a dataset, forecasts every task in
// the chosen mode, and writes one JSON-Lines record per task. Tasks that
// violate model limits are skipped with a warning and flip the exit code
// to 1; the rest are still written.
int cmd_forecast(const std::string& config_path, const std::vector<std::string>& overrides);

// [evaluate]: scores a forecast file against its dataset's ground truth
// with all four metrics, adds a seasonal-naive baseline, aggregates win
// rates and skill scores with bootstrap intervals, and writes the results
// and summary CSVs.
int cmd_evaluate(const std::string& config_path, const std::vector<std::string>& overrides);

struct EvaluationOutput {
    std::vector<eval::TaskResult> results;
    std::vector<eval::BenchmarkSummary> summaries;  // one per metric
    std::vector<std::string> skipped;               // also appended as footnotes
};

// The scoring core behind cmd_evaluate: pairs each task with its forecast,
// scores both the model and a seasonal-naive baseline on every metric,
// cross-checks the aggregate identities against a brute-force recomputation,
// and writes results.csv and summary.csv into out_dir. Throws when no task
// can be evaluated or when an identity check fails.
EvaluationOutput evaluate_forecasts(const std::vector<data::ForecastTask>& tasks,
                                    const std::vector<infer::QuantileForecast>& forecasts,
                                    const std::string& out_dir, int bootstrap, uint64_t seed,
                                    const std::string& model_name,
                                    const std::string& baseline_name);

}  // namespace groupcast::run
