#include "groupcast/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

namespace groupcast::eval {

namespace {

void check_shapes(const infer::QuantileForecast& forecast, const Matrix& actuals) {
    if (actuals.rows() != forecast.horizon || actuals.cols() != forecast.dims)
        throw Error("actuals shape does not match the forecast");
}

double pinball(double y, double yhat, double q) {
    return y >= yhat ? q * (y - yhat) : (1.0 - q) * (yhat - y);
}

// Mean absolute in-sample seasonal difference, skipping pairs with a
// missing endpoint.
double seasonal_scale(const Matrix& history, int season) {
    if (season < 1) throw Error("season length must be positive");
    double total = 0.0;
    int count = 0;
    for (int t = season; t < history.rows(); ++t)
        for (int d = 0; d < history.cols(); ++d) {
            const double a = history.at(t, d);
            const double b = history.at(t - season, d);
            if (is_missing(a) || is_missing(b)) continue;
            total += std::abs(a - b);
            count += 1;
        }
    if (count == 0 || total == 0.0) throw Error("constant seasonal history");
    return total / count;
}

double percentile(std::vector<double> samples, double pct) {
    std::sort(samples.begin(), samples.end());
    const double rank = pct / 100.0 * (static_cast<double>(samples.size()) - 1.0);
    const size_t lo = static_cast<size_t>(rank);
    const size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

}  // namespace

double wql(const infer::QuantileForecast& forecast, const Matrix& actuals) {
    check_shapes(forecast, actuals);
    const int nq = static_cast<int>(forecast.levels.size());
    double loss = 0.0;
    double denom = 0.0;
    for (int s = 0; s < forecast.horizon; ++s)
        for (int d = 0; d < forecast.dims; ++d) {
            const double y = actuals.at(s, d);
            if (is_missing(y)) continue;
            denom += std::abs(y);
            for (int q = 0; q < nq; ++q)
                loss += pinball(y, forecast.at(s, d, q), forecast.levels[static_cast<size_t>(q)]);
        }
    if (denom == 0.0) throw Error("undefined normalization: actuals sum to zero");
    return 2.0 * loss / (nq * denom);
}

double mase(const Matrix& point, const Matrix& actuals, const Matrix& history, int season) {
    if (actuals.rows() != point.rows() || actuals.cols() != point.cols())
        throw Error("actuals shape does not match the forecast");
    const double scale = seasonal_scale(history, season);
    double total = 0.0;
    int count = 0;
    for (int s = 0; s < actuals.rows(); ++s)
        for (int d = 0; d < actuals.cols(); ++d) {
            if (is_missing(actuals.at(s, d))) continue;
            total += std::abs(actuals.at(s, d) - point.at(s, d));
            count += 1;
        }
    if (count == 0) throw Error("no observed actuals to score");
    return total / count / scale;
}

double wape(const Matrix& point, const Matrix& actuals) {
    if (actuals.rows() != point.rows() || actuals.cols() != point.cols())
        throw Error("actuals shape does not match the forecast");
    double err = 0.0;
    double denom = 0.0;
    for (int s = 0; s < actuals.rows(); ++s)
        for (int d = 0; d < actuals.cols(); ++d) {
            const double y = actuals.at(s, d);
            if (is_missing(y)) continue;
            err += std::abs(y - point.at(s, d));
            denom += std::abs(y);
        }
    if (denom == 0.0) throw Error("undefined normalization: actuals sum to zero");
    return err / denom;
}

double sql(const infer::QuantileForecast& forecast, const Matrix& actuals,
           const Matrix& history, int season) {
    check_shapes(forecast, actuals);
    const double scale = seasonal_scale(history, season);
    const int nq = static_cast<int>(forecast.levels.size());
    double loss = 0.0;
    int count = 0;
    for (int s = 0; s < forecast.horizon; ++s)
        for (int d = 0; d < forecast.dims; ++d) {
            const double y = actuals.at(s, d);
            if (is_missing(y)) continue;
            for (int q = 0; q < nq; ++q)
                loss += pinball(y, forecast.at(s, d, q), forecast.levels[static_cast<size_t>(q)]);
            count += nq;
        }
    if (count == 0) throw Error("no observed actuals to score");
    return loss / count / scale;
}

int season_for_freq(const std::string& freq) {
    size_t i = 0;
    while (i < freq.size() && std::isdigit(static_cast<unsigned char>(freq[i]))) ++i;
    const int mult = i > 0 ? std::stoi(freq.substr(0, i)) : 1;
    std::string unit;
    for (; i < freq.size(); ++i)
        unit.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(freq[i]))));

    if (unit == "H") return 24;
    if (unit == "T" || unit == "MIN") {
        if (mult == 30) return 48;
        if (mult == 15) return 96;
        return 1;
    }
    if (unit == "D") return 7;
    if (unit == "W" || unit.rfind("W-", 0) == 0) return 52;
    if (unit == "M" || unit == "MS") return 12;
    return 1;
}

infer::QuantileForecast seasonal_naive(const Matrix& history, int season, int horizon,
                                       const std::vector<double>& levels) {
    if (history.rows() < 1) throw Error("seasonal naive needs at least one observation");
    const int t = history.rows();
    const int m = season <= t && season >= 1 ? season : 1;

    infer::QuantileForecast fc;
    fc.task_id = "seasonal_naive";
    fc.horizon = horizon;
    fc.dims = history.cols();
    fc.levels = levels;
    fc.values.resize(static_cast<size_t>(horizon) * fc.dims * levels.size());
    for (int s = 0; s < horizon; ++s) {
        const int src = t - m + s % m;
        for (int d = 0; d < fc.dims; ++d)
            for (size_t q = 0; q < levels.size(); ++q)
                fc.at(s, d, static_cast<int>(q)) = history.at(src, d);
    }
    return fc;
}

std::map<std::string, double> score_forecast(const infer::QuantileForecast& forecast,
                                             const data::ForecastTask& task) {
    if (task.ground_truth.empty())
        throw Error("task " + task.task_id + " has no ground truth to score against");
    const auto point = infer::point_forecast(forecast);
    const int season = season_for_freq(task.freq);
    const int usable = task.targets.rows() > season ? season : 1;
    return {
        {"wql", wql(forecast, task.ground_truth)},
        {"mase", mase(point, task.ground_truth, task.targets, usable)},
        {"wape", wape(point, task.ground_truth)},
        {"sql", sql(forecast, task.ground_truth, task.targets, usable)},
    };
}

namespace {

struct ScoreTable {
    std::vector<std::string> models;
    std::vector<std::string> tasks;
    // scores[model][task]
    std::vector<std::vector<double>> scores;
    int baseline_index = -1;
};

ScoreTable build_table(const std::vector<TaskResult>& results, const std::string& metric,
                       const std::string& baseline) {
    ScoreTable table;
    std::set<std::string> model_names;
    for (const auto& result : results)
        for (const auto& [model, metrics] : result.scores)
            if (metrics.count(metric)) model_names.insert(model);
    if (model_names.empty()) throw Error("no scores recorded for metric " + metric);
    if (!model_names.count(baseline)) throw Error("baseline model " + baseline + " has no scores");

    table.models.assign(model_names.begin(), model_names.end());
    for (const auto& result : results) table.tasks.push_back(result.task_id);
    table.scores.assign(table.models.size(),
                        std::vector<double>(results.size(), std::nan("")));
    for (size_t m = 0; m < table.models.size(); ++m) {
        if (table.models[m] == baseline) table.baseline_index = static_cast<int>(m);
        for (size_t t = 0; t < results.size(); ++t) {
            const auto mit = results[t].scores.find(table.models[m]);
            if (mit == results[t].scores.end()) continue;
            const auto sit = mit->second.find(metric);
            if (sit != mit->second.end()) table.scores[m][t] = sit->second;
        }
    }
    return table;
}

// Win rate over the given task subset: every (task, opponent) comparison
// counts once, ties as half a win.
double win_rate_of(const ScoreTable& table, size_t model, const std::vector<size_t>& tasks) {
    double wins = 0.0;
    int comparisons = 0;
    for (const size_t t : tasks) {
        const double mine = table.scores[model][t];
        if (std::isnan(mine)) continue;
        for (size_t o = 0; o < table.models.size(); ++o) {
            if (o == model) continue;
            const double theirs = table.scores[o][t];
            if (std::isnan(theirs)) continue;
            comparisons += 1;
            if (mine < theirs)
                wins += 1.0;
            else if (mine == theirs)
                wins += 0.5;
        }
    }
    if (comparisons == 0) return 50.0;
    return 100.0 * wins / comparisons;
}

double skill_of(const ScoreTable& table, size_t model, const std::vector<size_t>& tasks,
                int* used = nullptr) {
    double log_sum = 0.0;
    int count = 0;
    for (const size_t t : tasks) {
        const double mine = table.scores[model][t];
        const double base = table.scores[static_cast<size_t>(table.baseline_index)][t];
        if (std::isnan(mine) || std::isnan(base) || base == 0.0) continue;
        log_sum += std::log(std::max(mine / base, 1e-9));
        count += 1;
    }
    if (used) *used = count;
    if (count == 0) return 0.0;
    return 100.0 * (1.0 - std::exp(log_sum / count));
}

}  // namespace

BenchmarkSummary aggregate(const std::vector<TaskResult>& results, const std::string& metric,
                           const std::string& baseline, int bootstrap, uint64_t seed) {
    if (results.empty()) throw Error("cannot aggregate an empty result set");
    const auto table = build_table(results, metric, baseline);

    BenchmarkSummary summary;
    summary.metric = metric;
    summary.baseline = baseline;

    std::vector<size_t> all_tasks(results.size());
    for (size_t t = 0; t < all_tasks.size(); ++t) all_tasks[t] = t;

    for (size_t t = 0; t < results.size(); ++t) {
        const double base = table.scores[static_cast<size_t>(table.baseline_index)][t];
        if (!std::isnan(base) && base == 0.0)
            summary.warnings.push_back("task " + table.tasks[t] +
                                       " dropped from skill scores: baseline is exact");
    }

    for (size_t m = 0; m < table.models.size(); ++m) {
        ModelSummary row;
        row.model = table.models[m];
        row.win_rate = win_rate_of(table, m, all_tasks);
        row.skill = skill_of(table, m, all_tasks, &row.skill_tasks);
        row.win_rate_lo = row.win_rate_hi = row.win_rate;
        row.skill_lo = row.skill_hi = row.skill;

        if (bootstrap > 0) {
            Rng rng(Rng::mix(seed, m));
            std::vector<double> w_samples(static_cast<size_t>(bootstrap));
            std::vector<double> s_samples(static_cast<size_t>(bootstrap));
            std::vector<size_t> sample(results.size());
            for (int b = 0; b < bootstrap; ++b) {
                for (auto& t : sample)
                    t = static_cast<size_t>(
                        rng.uniform_int(0, static_cast<int64_t>(results.size()) - 1));
                w_samples[static_cast<size_t>(b)] = win_rate_of(table, m, sample);
                s_samples[static_cast<size_t>(b)] = skill_of(table, m, sample);
            }
            row.win_rate_lo = percentile(w_samples, 2.5);
            row.win_rate_hi = percentile(w_samples, 97.5);
            row.skill_lo = percentile(s_samples, 2.5);
            row.skill_hi = percentile(s_samples, 97.5);
        }
        summary.models.push_back(std::move(row));
    }
    return summary;
}

void write_results_csv(const std::vector<TaskResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "task_id,model,metric,value\n";
    for (const auto& result : results)
        for (const auto& [model, metrics] : result.scores)
            for (const auto& [metric, value] : metrics)
                out << result.task_id << ',' << model << ',' << metric << ',' << value << '\n';
}

void write_summary_csv(const std::vector<BenchmarkSummary>& summaries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "model,metric,win_rate,skill_score,win_lo,win_hi,skill_lo,skill_hi,footnotes\n";
    for (const auto& summary : summaries) {
        std::string footnotes;
        for (const auto& warning : summary.warnings) {
            if (!footnotes.empty()) footnotes += "; ";
            footnotes += warning;
        }
        for (const auto& row : summary.models)
            out << row.model << ',' << summary.metric << ',' << row.win_rate << ',' << row.skill
                << ',' << row.win_rate_lo << ',' << row.win_rate_hi << ',' << row.skill_lo << ','
                << row.skill_hi << ",\"" << footnotes << "\"\n";
    }
}

}  // namespace groupcast::eval
