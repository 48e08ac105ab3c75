#include "groupcast/data_model.hpp"

#include <algorithm>
#include <cmath>

namespace groupcast::data {

double CategoricalEncoder::encode(const std::string& category) const {
    auto it = category_map.find(category);
    return it == category_map.end() ? fallback : it->second;
}

std::optional<std::string> CategoricalEncoder::decode(double code) const {
    for (const auto& [category, value] : category_map)
        if (value == code) return category;
    return std::nullopt;
}

std::pair<std::vector<double>, CategoricalEncoder> encode_categorical_target(
    const std::vector<std::string>& column, const std::vector<double>& target,
    double smoothing_weight) {
    std::map<std::string, std::pair<double, int>> sums;  // category -> (sum, count)
    double global_sum = 0.0;
    int global_n = 0;
    const size_t fit_rows = std::min(column.size(), target.size());
    for (size_t i = 0; i < fit_rows; ++i) {
        if (is_missing(target[i])) continue;
        auto& [sum, n] = sums[column[i]];
        sum += target[i];
        ++n;
        global_sum += target[i];
        ++global_n;
    }
    if (global_n == 0) throw Error("no observations to fit encoder");
    const double global_mean = global_sum / global_n;

    CategoricalEncoder encoder;
    encoder.mode = CategoricalEncoder::Mode::target_encoding;
    encoder.fallback = global_mean;
    encoder.smoothing_weight = smoothing_weight;
    for (const auto& [category, acc] : sums) {
        const auto& [sum, n] = acc;
        encoder.category_map[category] =
            (sum + smoothing_weight * global_mean) / (n + smoothing_weight);
    }

    std::vector<double> encoded(column.size());
    for (size_t i = 0; i < column.size(); ++i) encoded[i] = encoder.encode(column[i]);
    return {std::move(encoded), std::move(encoder)};
}

std::pair<std::vector<double>, CategoricalEncoder> encode_categorical_ordinal(
    const std::vector<std::string>& column) {
    CategoricalEncoder encoder;
    encoder.mode = CategoricalEncoder::Mode::ordinal;
    std::vector<double> encoded(column.size());
    for (size_t i = 0; i < column.size(); ++i) {
        auto it = encoder.category_map.find(column[i]);
        if (it == encoder.category_map.end()) {
            const double code = static_cast<double>(encoder.category_map.size());
            it = encoder.category_map.emplace(column[i], code).first;
        }
        encoded[i] = it->second;
    }
    encoder.fallback = static_cast<double>(encoder.category_map.size());
    return {std::move(encoded), std::move(encoder)};
}

InferenceMode parse_mode(const std::string& name) {
    if (name == "univariate") return InferenceMode::univariate;
    if (name == "multivariate") return InferenceMode::multivariate;
    if (name == "covariates") return InferenceMode::covariate_informed;
    if (name == "cross") return InferenceMode::full_cross_learning;
    throw Error("unknown inference mode: " + name);
}

std::string mode_name(InferenceMode mode) {
    switch (mode) {
        case InferenceMode::univariate: return "univariate";
        case InferenceMode::multivariate: return "multivariate";
        case InferenceMode::covariate_informed: return "covariates";
        case InferenceMode::full_cross_learning: return "cross";
    }
    return "unknown";
}

GroupedBatch assemble_batch(const std::vector<ForecastTask>& tasks, InferenceMode mode) {
    GroupedBatch batch;
    if (tasks.empty()) return batch;

    for (const auto& task : tasks)
        if (task.freq != tasks[0].freq) throw Error("tasks in a batch must share frequency");
    if (mode == InferenceMode::full_cross_learning) {
        for (const auto& task : tasks)
            if (task.horizon != tasks[0].horizon) throw Error("mismatched horizons within a group");
    }

    int t_max = 0, h_max = 0;
    for (const auto& task : tasks) {
        t_max = std::max(t_max, task.targets.rows());
        h_max = std::max(h_max, task.horizon);
    }
    batch.t = t_max;
    batch.h = h_max;

    const bool fill_known_futures = mode == InferenceMode::covariate_informed ||
                                    mode == InferenceMode::full_cross_learning;
    int next_group = 1;
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        const auto& task = tasks[ti];
        const int t = task.targets.rows();
        const int h = task.horizon;
        if (mode == InferenceMode::covariate_informed && task.targets.cols() == 0)
            throw Error("covariate-informed task has no targets");
        if (task.covariates.cols() != static_cast<int>(task.covariate_roles.size()))
            throw Error("covariate role count does not match covariate columns");
        if (task.covariates.cols() > 0 && task.covariates.rows() != t + h)
            throw Error("covariate matrix must span T+H rows");
        const int task_group = mode == InferenceMode::full_cross_learning ? 1 : next_group;

        auto make_row = [&](Role role, int dim) {
            BatchRow row;
            row.values.assign(static_cast<size_t>(t_max + h_max), kMissing);
            row.role = role;
            row.task_index = static_cast<int>(ti);
            row.dim_index = dim;
            row.orig_t = t;
            row.orig_h = h;
            return row;
        };

        for (int d = 0; d < task.targets.cols(); ++d) {
            BatchRow row = make_row(Role::target, d);
            for (int i = 0; i < t; ++i)
                row.values[static_cast<size_t>(t_max - t + i)] = task.targets.at(i, d);
            if (!task.ground_truth.empty()) {
                row.future_truth.assign(static_cast<size_t>(h_max), kMissing);
                for (int i = 0; i < h; ++i)
                    row.future_truth[static_cast<size_t>(i)] = task.ground_truth.at(i, d);
            }
            row.group_id = mode == InferenceMode::univariate ? next_group++ : task_group;
            batch.rows.push_back(std::move(row));
        }

        if (mode != InferenceMode::univariate) {
            for (int m = 0; m < task.covariates.cols(); ++m) {
                const Role role = task.covariate_roles[static_cast<size_t>(m)];
                BatchRow row = make_row(role, m);
                for (int i = 0; i < t; ++i)
                    row.values[static_cast<size_t>(t_max - t + i)] = task.covariates.at(i, m);
                if (role == Role::known_covariate && fill_known_futures)
                    for (int i = 0; i < h; ++i)
                        row.values[static_cast<size_t>(t_max + i)] = task.covariates.at(t + i, m);
                row.group_id = task_group;
                batch.rows.push_back(std::move(row));
            }
            if (mode != InferenceMode::full_cross_learning) ++next_group;
        }
    }
    return batch;
}

std::vector<std::string> validate_task(const ForecastTask& task) {
    std::vector<std::string> diagnostics;
    if (task.horizon <= 0) diagnostics.push_back("horizon must be positive");
    if (task.targets.cols() < 1) diagnostics.push_back("task has no target columns");

    const int t = task.targets.rows();
    const int m = task.covariates.cols();
    if (m != static_cast<int>(task.covariate_roles.size()))
        diagnostics.push_back("covariate role count does not match covariate columns");
    if (m > 0 && task.covariates.rows() != t + task.horizon)
        diagnostics.push_back("covariate matrix must span T+H rows");

    for (int c = 0; c < std::min(m, static_cast<int>(task.covariate_roles.size())); ++c) {
        if (task.covariate_roles[static_cast<size_t>(c)] == Role::target) {
            diagnostics.push_back("covariate column " + std::to_string(c) + " tagged as target");
            continue;
        }
        if (task.covariate_roles[static_cast<size_t>(c)] != Role::known_covariate) continue;
        if (task.covariates.rows() != t + task.horizon) continue;
        for (int i = t; i < task.covariates.rows(); ++i)
            if (is_missing(task.covariates.at(i, c))) {
                diagnostics.push_back("known covariate column " + std::to_string(c) +
                                      " has missing future values");
                break;
            }
    }

    if (!task.ground_truth.empty() &&
        (task.ground_truth.rows() != task.horizon ||
         task.ground_truth.cols() != task.targets.cols()))
        diagnostics.push_back("ground truth shape must be H x D");
    return diagnostics;
}

}  // namespace groupcast::data
