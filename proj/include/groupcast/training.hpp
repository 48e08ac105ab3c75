#pragma once

#include "groupcast/common.hpp"
#include "groupcast/data_model.hpp"
#include "groupcast/model.hpp"
#include "groupcast/nn.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace groupcast::training {

struct TrainConfig {
    int stage1_context = 256;
    int stage2_context = 512;
    int stage1_steps = 600;
    int stage2_steps = 400;
    int stage1_max_output_patches = 2;
    int stage2_max_output_patches = 8;
    double peak_lr = 3e-4;
    double warmup_frac = 0.05;
    double weight_decay = 0.01;
    int batch_tasks = 8;
    // Task-category mix: plain series, multivariate (possibly with past-only
    // covariates), and known-covariate tasks.
    double mix_univariate = 0.4;
    double mix_multivariate = 0.3;
    double mix_covariate = 0.3;
    uint64_t seed = 0;

    int total_steps() const { return stage1_steps + stage2_steps; }
    void validate() const;  // throws ConfigError on violations
};

// Everything the objective needs besides the forward pass: normalized future
// targets and the supervision mask, both shaped (rows, steps) to match the
// prediction tensor's first two axes.
struct LossInputs {
    std::vector<double> targets;  // row-major (B, S), zeros where masked out
    std::vector<double> mask;     // 1 = supervised, 0 = ignored
    int n_rows = 0;
    int n_steps = 0;
};

// Normalizes each target row's future values with the forward pass's fitted
// statistics and masks out covariate rows, structural padding, and missing
// ground truth.
LossInputs build_loss_inputs(const data::GroupedBatch& batch, const model::ForwardResult& result);

// Mean over supervised (row, step) pairs of the pinball loss summed across
// quantile levels. Differentiable through the prediction tensor; throws
// "no supervised targets in batch" when the mask is all zero.
nn::Tensor pinball_loss(const nn::Tensor& predictions, const LossInputs& inputs,
                        const std::vector<double>& levels);

int draw_task_category(const TrainConfig& config, Rng& rng);

// One training batch: per-task category by the configured mix, history
// lengths up to `context_len`, horizon drawn to need 1..max_output_patches
// future patches, group IDs per task.
data::GroupedBatch sample_training_batch(const TrainConfig& config, int context_len,
                                         int max_output_patches, int patch_len, Rng& rng);

// Draws `batch_tasks` tasks with replacement from a fixed pool, trimming
// each to the stage's context cap (most recent window) and horizon budget.
// Every pool task must carry ground truth.
data::GroupedBatch sample_pool_batch(const std::vector<data::ForecastTask>& pool,
                                     const TrainConfig& config, int context_len,
                                     int max_output_patches, int patch_len, Rng& rng);

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Adam moments per parameter, stored by name so checkpoints can round-trip
// them alongside the weights.
struct OptimizerState {
    int64_t step = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

// Decoupled-decay Adam update from the gradients currently stored on the
// parameters. Weight decay applies to matrices only; vectors (biases, gains)
// are exempt.
void adamw_step(model::Parameters& params, OptimizerState& state, const OptimizerConfig& config,
                double lr);

// Linear warmup to the peak over `warmup_frac` of `total_steps`, then cosine
// decay to zero.
double lr_at(int step, int total_steps, double peak_lr, double warmup_frac);

// Forward, objective, backward, one optimizer update. Returns the pre-update
// loss; throws on a non-finite loss.
double train_step(model::Parameters& params, const data::GroupedBatch& batch,
                  const model::ModelConfig& model_config, const TrainConfig& config,
                  OptimizerState& state, double lr);

struct StepRecord {
    int step = 0;
    int stage = 1;
    double loss = 0.0;
    double lr = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Runs steps [start_step, end_step), where end_step = -1 means the full
// configured run. Stage 1 uses the short context and few output patches,
// stage 2 the extended settings. Each step's batch is seeded by
// (config.seed, step), so a resume from any boundary replays the exact
// remaining batch sequence.
std::vector<StepRecord> run_curriculum(model::Parameters& params,
                                       const model::ModelConfig& model_config,
                                       const TrainConfig& config, OptimizerState& state,
                                       int start_step = 0, int end_step = -1,
                                       const StepCallback& on_step = {});

// Same curriculum, but batches come from a fixed task pool instead of the
// synthetic generators.
std::vector<StepRecord> run_curriculum(model::Parameters& params,
                                       const model::ModelConfig& model_config,
                                       const TrainConfig& config,
                                       const std::vector<data::ForecastTask>& pool,
                                       OptimizerState& state, int start_step = 0,
                                       int end_step = -1, const StepCallback& on_step = {});

}  // namespace groupcast::training
