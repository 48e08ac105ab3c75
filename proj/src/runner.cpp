#include "groupcast/runner.hpp"

#include "groupcast/config_file.hpp"
#include "groupcast/evaluation.hpp"
#include "groupcast/inference.hpp"
#include "groupcast/io.hpp"
#include "groupcast/synthetic.hpp"
#include "groupcast/training.hpp"

#include "json.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace groupcast::run {

namespace fs = std::filesystem;

namespace {

cfg::Config load_config(const std::string& config_path,
                        const std::vector<std::string>& overrides) {
    cfg::Config config;
    if (!config_path.empty()) config = cfg::parse_file(config_path);
    cfg::apply_overrides(config, overrides);
    return config;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

void ensure_parent_dir(const std::string& file_path) {
    const fs::path parent = fs::path(file_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

// data/train.jsonl -> data/train.config.toml
std::string sibling_path(const std::string& file_path, const std::string& suffix) {
    fs::path p(file_path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

model::ModelConfig read_model_config(const cfg::Config& config, const std::string& section) {
    const model::ModelConfig defaults;
    model::ModelConfig mcfg;
    mcfg.patch_len = static_cast<int>(config.get_int(section + ".patch_len", defaults.patch_len));
    mcfg.d_model = static_cast<int>(config.get_int(section + ".d_model", defaults.d_model));
    mcfg.n_blocks = static_cast<int>(config.get_int(section + ".n_blocks", defaults.n_blocks));
    mcfg.n_heads = static_cast<int>(config.get_int(section + ".n_heads", defaults.n_heads));
    mcfg.max_context =
        static_cast<int>(config.get_int(section + ".max_context", defaults.max_context));
    mcfg.max_output_patches = static_cast<int>(
        config.get_int(section + ".max_output_patches", defaults.max_output_patches));
    mcfg.rope_base = config.get_double(section + ".rope_base", defaults.rope_base);
    mcfg.validate();
    return mcfg;
}

bool same_model_config(const model::ModelConfig& a, const model::ModelConfig& b) {
    return a.patch_len == b.patch_len && a.d_model == b.d_model && a.n_blocks == b.n_blocks &&
           a.n_heads == b.n_heads && a.max_context == b.max_context &&
           a.max_output_patches == b.max_output_patches && a.rope_base == b.rope_base &&
           a.quantile_levels == b.quantile_levels;
}

data::InferenceMode read_mode(const cfg::Config& config, const std::string& key) {
    const std::string name = config.get_string(key, "univariate");
    try {
        return data::parse_mode(name);
    } catch (const Error& e) {
        throw ConfigError(std::string(e.what()) +
                          " (expected univariate, multivariate, covariates, or cross)");
    }
}

}  // namespace

int cmd_generate(const std::string& config_path, const std::vector<std::string>& overrides) {
    return guarded([&] {
        const auto config = load_config(config_path, overrides);

        synth::CorpusConfig corpus;
        const std::string out = config.require_string("generate.out");
        corpus.n_tasks = static_cast<int>(config.get_int("generate.n_tasks", corpus.n_tasks));
        corpus.seed = static_cast<uint64_t>(config.get_int("generate.seed", 0));
        corpus.min_history =
            static_cast<int>(config.get_int("generate.min_history", corpus.min_history));
        corpus.max_history =
            static_cast<int>(config.get_int("generate.max_history", corpus.max_history));
        corpus.min_horizon =
            static_cast<int>(config.get_int("generate.min_horizon", corpus.min_horizon));
        corpus.max_horizon =
            static_cast<int>(config.get_int("generate.max_horizon", corpus.max_horizon));
        corpus.min_dims = static_cast<int>(config.get_int("generate.min_dims", corpus.min_dims));
        corpus.max_dims = static_cast<int>(config.get_int("generate.max_dims", corpus.max_dims));
        corpus.p_univariate = config.get_double("generate.p_univariate", corpus.p_univariate);
        corpus.p_multivariate =
            config.get_double("generate.p_multivariate", corpus.p_multivariate);
        corpus.p_covariate = config.get_double("generate.p_covariate", corpus.p_covariate);
        corpus.p_driver = config.get_double("generate.p_driver", corpus.p_driver);
        corpus.freq = config.get_string("generate.freq", corpus.freq);
        config.reject_unknown("generate");

        if (corpus.n_tasks < 1) throw ConfigError("generate.n_tasks must be positive");
        if (corpus.min_history < 8 || corpus.max_history < corpus.min_history)
            throw ConfigError("generate history range is invalid");
        if (corpus.min_horizon < 1 || corpus.max_horizon < corpus.min_horizon)
            throw ConfigError("generate horizon range is invalid");
        if (corpus.min_dims < 2 || corpus.max_dims < corpus.min_dims)
            throw ConfigError("generate dims range is invalid");
        if (corpus.p_univariate < 0 || corpus.p_multivariate < 0 || corpus.p_covariate < 0 ||
            corpus.p_univariate + corpus.p_multivariate + corpus.p_covariate <= 0)
            throw ConfigError("generate task mix probabilities are invalid");
        if (corpus.p_driver < 0 || corpus.p_driver > 1)
            throw ConfigError("generate.p_driver must lie in [0, 1]");

        const auto tasks = synth::sample_corpus(corpus);
        ensure_parent_dir(out);
        io::save_tasks(tasks, out);

        nlohmann::json manifest;
        manifest["file"] = fs::path(out).filename().string();
        manifest["n_tasks"] = corpus.n_tasks;
        manifest["seed"] = corpus.seed;
        manifest["generator"] = config.resolved;
        std::ofstream mout(sibling_path(out, ".manifest.json"));
        mout << manifest.dump(2) << '\n';

        cfg::write_snapshot(config, sibling_path(out, ".config.toml"));
        std::cout << "wrote " << tasks.size() << " tasks to " << out << '\n';
    });
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    return guarded([&] {
        const auto config = load_config(config_path, overrides);

        const std::string run_dir = config.require_string("train.run_dir");
        const std::string data = config.get_string("train.data", "synthetic");
        const bool resume = config.get_bool("train.resume", false);
        const int checkpoint_every =
            static_cast<int>(config.get_int("train.checkpoint_every", 0));
        config.get_bool("train.deterministic", true);

        const auto mcfg = read_model_config(config, "train.model");

        training::TrainConfig tcfg;
        tcfg.seed = static_cast<uint64_t>(config.get_int("train.seed", 0));
        const std::string s = "train.schedule.";
        tcfg.stage1_context =
            static_cast<int>(config.get_int(s + "stage1_context", tcfg.stage1_context));
        tcfg.stage2_context =
            static_cast<int>(config.get_int(s + "stage2_context", tcfg.stage2_context));
        tcfg.stage1_steps = static_cast<int>(config.get_int(s + "stage1_steps", tcfg.stage1_steps));
        tcfg.stage2_steps = static_cast<int>(config.get_int(s + "stage2_steps", tcfg.stage2_steps));
        tcfg.stage1_max_output_patches = static_cast<int>(
            config.get_int(s + "stage1_max_output_patches", tcfg.stage1_max_output_patches));
        tcfg.stage2_max_output_patches = static_cast<int>(
            config.get_int(s + "stage2_max_output_patches", tcfg.stage2_max_output_patches));
        tcfg.peak_lr = config.get_double(s + "peak_lr", tcfg.peak_lr);
        tcfg.warmup_frac = config.get_double(s + "warmup_frac", tcfg.warmup_frac);
        tcfg.weight_decay = config.get_double(s + "weight_decay", tcfg.weight_decay);
        tcfg.batch_tasks = static_cast<int>(config.get_int(s + "batch_tasks", tcfg.batch_tasks));
        tcfg.mix_univariate = config.get_double(s + "mix_univariate", tcfg.mix_univariate);
        tcfg.mix_multivariate = config.get_double(s + "mix_multivariate", tcfg.mix_multivariate);
        tcfg.mix_covariate = config.get_double(s + "mix_covariate", tcfg.mix_covariate);
        config.reject_unknown("train");
        tcfg.validate();

        std::optional<std::vector<data::ForecastTask>> pool;
        if (data != "synthetic") pool = io::load_tasks(data);

        fs::create_directories(run_dir);
        cfg::write_snapshot(config, (fs::path(run_dir) / "config.toml").string());

        auto params = model::init_parameters(mcfg, tcfg.seed);
        training::OptimizerState state;
        int start_step = 0;

        if (resume) {
            std::string newest;
            int newest_step = -1;
            for (const auto& entry : fs::directory_iterator(run_dir)) {
                const std::string name = entry.path().filename().string();
                if (name.rfind("ckpt-", 0) != 0 || entry.path().extension() != ".gcpt") continue;
                const auto ckpt = io::load_checkpoint(entry.path().string());
                const int step = ckpt.next_step.value_or(0);
                if (step > newest_step) {
                    newest_step = step;
                    newest = entry.path().string();
                }
            }
            if (newest.empty()) {
                std::cout << "no checkpoint in " << run_dir << ", starting fresh\n";
            } else {
                auto ckpt = io::load_checkpoint(newest);
                if (!same_model_config(ckpt.config, mcfg))
                    throw Error("checkpoint " + newest +
                                " does not match the configured model");
                params = std::move(ckpt.params);
                if (ckpt.optimizer) state = std::move(*ckpt.optimizer);
                start_step = newest_step;
                std::cout << "resuming from " << newest << " at step " << start_step << '\n';
            }
        }

        const std::string loss_path = (fs::path(run_dir) / "loss.csv").string();
        const bool fresh_log = start_step == 0 || !fs::exists(loss_path);
        std::ofstream loss_log(loss_path, fresh_log ? std::ios::trunc : std::ios::app);
        if (fresh_log) loss_log << "step,stage,loss,lr\n";

        const auto save = [&](const std::string& name, int next_step) {
            io::save_checkpoint((fs::path(run_dir) / name).string(), mcfg, params, &state,
                                &next_step);
        };
        const auto on_step = [&](const training::StepRecord& record) {
            char row[128];
            std::snprintf(row, sizeof(row), "%d,%d,%.17g,%.17g\n", record.step, record.stage,
                          record.loss, record.lr);
            loss_log << row;
            loss_log.flush();
            if (checkpoint_every > 0 && (record.step + 1) % checkpoint_every == 0 &&
                record.step + 1 < tcfg.total_steps()) {
                char name[32];
                std::snprintf(name, sizeof(name), "ckpt-%06d.gcpt", record.step + 1);
                save(name, record.step + 1);
            }
        };

        std::vector<training::StepRecord> log;
        if (pool)
            log = training::run_curriculum(params, mcfg, tcfg, *pool, state, start_step, -1,
                                           on_step);
        else
            log = training::run_curriculum(params, mcfg, tcfg, state, start_step, -1, on_step);

        save("ckpt-final.gcpt", tcfg.total_steps());
        std::cout << "trained " << log.size() << " steps into " << run_dir;
        if (!log.empty()) std::cout << ", final loss " << log.back().loss;
        std::cout << '\n';
    });
}

int cmd_forecast(const std::string& config_path, const std::vector<std::string>& overrides) {
    return guarded([&] {
        const auto config = load_config(config_path, overrides);

        const std::string checkpoint = config.require_string("forecast.checkpoint");
        const std::string dataset = config.require_string("forecast.dataset");
        const std::string out = config.require_string("forecast.out");
        const auto mode = read_mode(config, "forecast.mode");
        const int workers = static_cast<int>(config.get_int("forecast.workers", 1));
        config.get_bool("forecast.deterministic", true);
        config.reject_unknown("forecast");
        if (workers < 1) throw ConfigError("forecast.workers must be positive");

        const auto ckpt = io::load_checkpoint(checkpoint);
        const auto tasks = io::load_tasks(dataset);
        if (tasks.empty()) throw Error("dataset " + dataset + " holds no tasks");

        const int horizon_cap = ckpt.config.max_output_patches * ckpt.config.patch_len;
        bool any_failed = false;
        for (const auto& task : tasks)
            if (task.targets.rows() > ckpt.config.max_context)
                std::cerr << "warning: task " << task.task_id << " context "
                          << task.targets.rows() << " truncated to "
                          << ckpt.config.max_context << " steps\n";

        std::vector<infer::QuantileForecast> forecasts;
        if (mode == data::InferenceMode::full_cross_learning) {
            std::vector<data::ForecastTask> usable;
            for (const auto& task : tasks) {
                if (task.horizon > horizon_cap) {
                    std::cerr << "warning: task " << task.task_id << " horizon "
                              << task.horizon << " exceeds the model limit of " << horizon_cap
                              << "; skipped\n";
                    any_failed = true;
                } else if (!usable.empty() && task.horizon != usable.front().horizon) {
                    std::cerr << "warning: task " << task.task_id
                              << " horizon differs from the cross-learning batch; skipped\n";
                    any_failed = true;
                } else {
                    usable.push_back(task);
                }
            }
            if (usable.empty()) throw Error("no task is usable in cross-learning mode");
            forecasts = infer::forecast(usable, ckpt.params, ckpt.config, mode);
        } else {
            std::vector<std::optional<infer::QuantileForecast>> slots(tasks.size());
            std::vector<std::string> failures(tasks.size());
            const int n_threads = std::min<int>(workers, static_cast<int>(tasks.size()));
            auto work = [&](int offset) {
                for (size_t i = static_cast<size_t>(offset); i < tasks.size();
                     i += static_cast<size_t>(n_threads)) {
                    try {
                        slots[i] = infer::forecast({tasks[i]}, ckpt.params, ckpt.config,
                                                   mode)[0];
                    } catch (const std::exception& e) {
                        failures[i] = e.what();
                    }
                }
            };
            if (n_threads == 1) {
                work(0);
            } else {
                std::vector<std::thread> threads;
                for (int w = 0; w < n_threads; ++w) threads.emplace_back(work, w);
                for (auto& thread : threads) thread.join();
            }
            for (size_t i = 0; i < tasks.size(); ++i) {
                if (slots[i]) {
                    forecasts.push_back(std::move(*slots[i]));
                } else {
                    std::cerr << "warning: task " << tasks[i].task_id << " skipped: "
                              << failures[i] << '\n';
                    any_failed = true;
                }
            }
        }

        ensure_parent_dir(out);
        io::save_forecasts(forecasts, out);
        cfg::write_snapshot(config, sibling_path(out, ".config.toml"));
        std::cout << "wrote " << forecasts.size() << " forecasts to " << out << '\n';
        if (any_failed) throw Error("some tasks could not be forecast");
    });
}

namespace {

// Independent re-derivation of the two aggregate identities: the win rate
// maps onto the brute-force average rank, and the skill score onto the
// brute-force geometric mean of score ratios.
void self_check_identities(const std::vector<eval::TaskResult>& results,
                           const eval::BenchmarkSummary& summary) {
    std::vector<std::string> models;
    for (const auto& row : summary.models) models.push_back(row.model);
    const size_t n = models.size();

    for (size_t m = 0; m < n; ++m) {
        double rank_total = 0.0;
        int rank_tasks = 0;
        double log_sum = 0.0;
        int ratio_tasks = 0;
        for (const auto& result : results) {
            const double mine = result.scores.at(models[m]).at(summary.metric);
            double rank = 1.0;
            for (size_t o = 0; o < n; ++o) {
                if (o == m) continue;
                const double theirs = result.scores.at(models[o]).at(summary.metric);
                if (theirs < mine) rank += 1.0;
                if (theirs == mine) rank += 0.5;
            }
            rank_total += rank;
            rank_tasks += 1;
            const double base = result.scores.at(summary.baseline).at(summary.metric);
            if (base != 0.0) {
                log_sum += std::log(std::max(mine / base, 1e-9));
                ratio_tasks += 1;
            }
        }
        const double avg_rank = rank_total / rank_tasks;
        const double implied_rank =
            1.0 + (1.0 - summary.models[m].win_rate / 100.0) * (static_cast<double>(n) - 1.0);
        if (std::abs(avg_rank - implied_rank) > 1e-12)
            throw Error("self-check failed: win rate does not match the average rank for " +
                        models[m]);
        if (ratio_tasks > 0) {
            const double geomean = std::exp(log_sum / ratio_tasks);
            if (std::abs(geomean - (1.0 - summary.models[m].skill / 100.0)) > 1e-12)
                throw Error("self-check failed: skill does not match the geomean ratio for " +
                            models[m]);
        }
    }
}

}  // namespace

EvaluationOutput evaluate_forecasts(const std::vector<data::ForecastTask>& tasks,
                                    const std::vector<infer::QuantileForecast>& forecasts,
                                    const std::string& out_dir, int bootstrap, uint64_t seed,
                                    const std::string& model_name,
                                    const std::string& baseline_name) {
    std::map<std::string, const infer::QuantileForecast*> by_id;
    for (const auto& fc : forecasts) {
        if (by_id.count(fc.task_id)) throw Error("duplicate forecast for task " + fc.task_id);
        by_id[fc.task_id] = &fc;
    }

    EvaluationOutput out;
    for (const auto& task : tasks) {
        const auto it = by_id.find(task.task_id);
        if (it == by_id.end()) {
            out.skipped.push_back("task " + task.task_id + " has no forecast; skipped");
            continue;
        }
        if (task.ground_truth.empty()) {
            out.skipped.push_back("task " + task.task_id + " has no ground truth; skipped");
            continue;
        }
        try {
            eval::TaskResult result;
            result.task_id = task.task_id;
            result.scores[model_name] = eval::score_forecast(*it->second, task);
            const auto baseline =
                eval::seasonal_naive(task.targets, eval::season_for_freq(task.freq),
                                     task.horizon, it->second->levels);
            result.scores[baseline_name] = eval::score_forecast(baseline, task);
            out.results.push_back(std::move(result));
        } catch (const Error& e) {
            out.skipped.push_back("task " + task.task_id + " not scorable: " + e.what());
        }
    }
    if (out.results.empty()) throw Error("no task could be evaluated");

    for (const std::string metric : {"wql", "mase", "wape", "sql"}) {
        auto summary = eval::aggregate(out.results, metric, baseline_name, bootstrap, seed);
        self_check_identities(out.results, summary);
        summary.warnings.insert(summary.warnings.end(), out.skipped.begin(),
                                out.skipped.end());
        out.summaries.push_back(std::move(summary));
    }

    fs::create_directories(out_dir);
    eval::write_results_csv(out.results, (fs::path(out_dir) / "results.csv").string());
    eval::write_summary_csv(out.summaries, (fs::path(out_dir) / "summary.csv").string());
    return out;
}

int cmd_evaluate(const std::string& config_path, const std::vector<std::string>& overrides) {
    return guarded([&] {
        const auto config = load_config(config_path, overrides);

        const std::string forecast_path = config.require_string("evaluate.forecasts");
        const std::string dataset = config.require_string("evaluate.dataset");
        const std::string out_dir = config.require_string("evaluate.out_dir");
        const int bootstrap = static_cast<int>(config.get_int("evaluate.bootstrap", 1000));
        const uint64_t seed = static_cast<uint64_t>(config.get_int("evaluate.seed", 0));
        const std::string model_name = config.get_string("evaluate.model_name", "model");
        const std::string baseline_name =
            config.get_string("evaluate.baseline_name", "seasonal_naive");
        config.reject_unknown("evaluate");
        if (bootstrap < 0) throw ConfigError("evaluate.bootstrap must be nonnegative");
        if (model_name == baseline_name)
            throw ConfigError("evaluate.model_name and evaluate.baseline_name must differ");

        const auto tasks = io::load_tasks(dataset);
        const auto forecasts = io::load_forecasts(forecast_path);
        const auto out = evaluate_forecasts(tasks, forecasts, out_dir, bootstrap, seed,
                                            model_name, baseline_name);
        for (const auto& skip : out.skipped) std::cerr << "warning: " << skip << '\n';
        cfg::write_snapshot(config, (fs::path(out_dir) / "config.toml").string());

        std::cout << "evaluated " << out.results.size() << " tasks";
        if (!out.skipped.empty()) std::cout << " (" << out.skipped.size() << " skipped)";
        std::cout << "; self-check passed: rank and geomean identities hold\n";
        for (const auto& summary : out.summaries)
            for (const auto& row : summary.models)
                std::cout << "  " << summary.metric << ' ' << row.model << ": win_rate "
                          << row.win_rate << ", skill " << row.skill << '\n';
    });
}

}  // namespace groupcast::run
