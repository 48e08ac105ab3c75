#pragma once

#include "groupcast/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace groupcast::data {

enum class Role { target, past_only_covariate, known_covariate };

// One forecasting problem: target history, aligned covariates, and a horizon.
// Covariates span history plus future; what the model may actually see of the
// future is decided per role at batch assembly. Ground truth, when present,
// holds the target's future values for evaluation only.
struct ForecastTask {
    std::string task_id;
    std::string freq;
    int horizon = 0;
    Matrix targets;                     // T x D, missing markers allowed
    Matrix covariates;                  // (T+H) x M
    std::vector<Role> covariate_roles;  // length M, never Role::target
    Matrix ground_truth;                // H x D when available, else empty
};

struct CategoricalEncoder {
    enum class Mode { target_encoding, ordinal };
    Mode mode = Mode::ordinal;
    std::map<std::string, double> category_map;
    double fallback = 0.0;  // global target mean, or K for ordinal codes
    double smoothing_weight = 0.0;

    double encode(const std::string& category) const;
    std::optional<std::string> decode(double code) const;
};

// Replaces each category by the smoothed mean of the target where it occurs:
// (n_c * mean_c + m * mean_global) / (n_c + m). Fitted on rows covered by the
// target (missing targets excluded); rows beyond the target history are
// encoded with the fitted map. Unseen categories get the global mean.
std::pair<std::vector<double>, CategoricalEncoder> encode_categorical_target(
    const std::vector<std::string>& column, const std::vector<double>& target,
    double smoothing_weight);

// Assigns integer codes 0..K-1 in order of first appearance.
std::pair<std::vector<double>, CategoricalEncoder> encode_categorical_ordinal(
    const std::vector<std::string>& column);

enum class InferenceMode { univariate, multivariate, covariate_informed, full_cross_learning };

InferenceMode parse_mode(const std::string& name);
std::string mode_name(InferenceMode mode);

// One series dimension of some task, aligned to the batch-wide T and H.
// Values are raw (unnormalized); every unobserved or padded slot holds the
// missing marker, so downstream masking depends on missingness alone.
struct BatchRow {
    std::vector<double> values;  // length T+H of the batch
    // Held-out target values for the future region (length H of the batch,
    // missing where absent). Kept out of `values` so the model never sees
    // them; training and evaluation read them as labels.
    std::vector<double> future_truth;
    Role role = Role::target;
    int group_id = 0;
    int task_index = 0;
    int dim_index = 0;
    int orig_t = 0;
    int orig_h = 0;
};

struct GroupedBatch {
    int t = 0;
    int h = 0;
    std::vector<BatchRow> rows;
};

// Flattens tasks into rows and assigns group IDs by mode: univariate gives
// every target row its own group and drops covariates; multivariate groups all
// variates of a task (known-covariate futures withheld); covariate_informed
// additionally fills known-covariate futures; full_cross_learning puts the
// whole batch in one group with futures filled.
GroupedBatch assemble_batch(const std::vector<ForecastTask>& tasks, InferenceMode mode);

// Reports every invariant violation without mutating the task.
std::vector<std::string> validate_task(const ForecastTask& task);

}  // namespace groupcast::data
