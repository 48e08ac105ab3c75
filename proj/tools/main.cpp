// Command-line front end for the forecasting pipeline. All heavy lifting
// lives behind the C API; this file only maps flags onto config overrides.
#include "groupcast.h"

#include "CLI11.hpp"

#include <string>
#include <vector>

namespace {

int dispatch(int (*command)(const char*, const char* const*, int), const std::string& config,
             const std::vector<std::string>& overrides) {
    std::vector<const char*> pointers;
    pointers.reserve(overrides.size());
    for (const auto& item : overrides) pointers.push_back(item.c_str());
    return command(config.c_str(), pointers.empty() ? nullptr : pointers.data(),
                   static_cast<int>(pointers.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"groupcast: train and run a group-attention quantile forecaster"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("-c,--config", config_path, "configuration file (TOML)")
        ->envname("GROUPCAST_CONFIG");
    std::vector<std::string> sets;
    app.add_option("--set", sets, "override a config key, e.g. --set train.seed=7");

    auto* generate = app.add_subcommand("generate", "sample a synthetic task corpus");
    std::string gen_out;
    int64_t gen_n_tasks = 0, gen_seed = 0;
    generate->add_option("--out", gen_out, "output dataset (JSON Lines)");
    generate->add_option("--n-tasks", gen_n_tasks, "number of tasks to sample");
    generate->add_option("--seed", gen_seed, "corpus seed");

    auto* train = app.add_subcommand("train", "run the two-stage training curriculum");
    std::string train_run_dir, train_data;
    bool train_resume = false;
    train->add_option("--run-dir", train_run_dir, "directory for checkpoints and logs");
    train->add_option("--data", train_data, "train on this dataset instead of the generators");
    train->add_flag("--resume", train_resume, "continue from the newest checkpoint");

    auto* forecast = app.add_subcommand("forecast", "forecast every task in a dataset");
    std::string fc_checkpoint, fc_dataset, fc_out, fc_mode;
    int64_t fc_workers = 0;
    forecast->add_option("--checkpoint", fc_checkpoint, "trained model checkpoint");
    forecast->add_option("--dataset", fc_dataset, "tasks to forecast (JSON Lines)");
    forecast->add_option("--out", fc_out, "output forecast file");
    forecast->add_option("--mode", fc_mode,
                         "univariate, multivariate, covariates, or cross");
    forecast->add_option("--workers", fc_workers, "forecast tasks on this many threads");

    auto* evaluate = app.add_subcommand("evaluate", "score forecasts against ground truth");
    std::string ev_forecasts, ev_dataset, ev_out_dir;
    evaluate->add_option("--forecasts", ev_forecasts, "forecast file to score");
    evaluate->add_option("--dataset", ev_dataset, "dataset holding the ground truth");
    evaluate->add_option("--out-dir", ev_out_dir, "directory for the result CSVs");

    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> overrides = sets;
    if (generate->parsed()) {
        if (generate->count("--out")) overrides.push_back("generate.out=" + gen_out);
        if (generate->count("--n-tasks"))
            overrides.push_back("generate.n_tasks=" + std::to_string(gen_n_tasks));
        if (generate->count("--seed"))
            overrides.push_back("generate.seed=" + std::to_string(gen_seed));
        return dispatch(gc_cmd_generate, config_path, overrides);
    }
    if (train->parsed()) {
        if (train->count("--run-dir")) overrides.push_back("train.run_dir=" + train_run_dir);
        if (train->count("--data")) overrides.push_back("train.data=" + train_data);
        if (train_resume) overrides.push_back("train.resume=true");
        return dispatch(gc_cmd_train, config_path, overrides);
    }
    if (forecast->parsed()) {
        if (forecast->count("--checkpoint"))
            overrides.push_back("forecast.checkpoint=" + fc_checkpoint);
        if (forecast->count("--dataset"))
            overrides.push_back("forecast.dataset=" + fc_dataset);
        if (forecast->count("--out")) overrides.push_back("forecast.out=" + fc_out);
        if (forecast->count("--mode")) overrides.push_back("forecast.mode=" + fc_mode);
        if (forecast->count("--workers"))
            overrides.push_back("forecast.workers=" + std::to_string(fc_workers));
        return dispatch(gc_cmd_forecast, config_path, overrides);
    }
    if (evaluate->count("--forecasts"))
        overrides.push_back("evaluate.forecasts=" + ev_forecasts);
    if (evaluate->count("--dataset")) overrides.push_back("evaluate.dataset=" + ev_dataset);
    if (evaluate->count("--out-dir")) overrides.push_back("evaluate.out_dir=" + ev_out_dir);
    return dispatch(gc_cmd_evaluate, config_path, overrides);
}
