#include "groupcast/training.hpp"

#include "groupcast/synthetic.hpp"
#include "groupcast/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace groupcast::training {

void TrainConfig::validate() const {
    const double mix = mix_univariate + mix_multivariate + mix_covariate;
    if (std::abs(mix - 1.0) > 1e-9) throw ConfigError("task mix probabilities must sum to 1");
    if (mix_univariate < 0.0 || mix_multivariate < 0.0 || mix_covariate < 0.0)
        throw ConfigError("task mix probabilities must be nonnegative");
    if (stage2_context < stage1_context)
        throw ConfigError("stage-2 context must not be shorter than stage 1");
    if (stage1_context < 1) throw ConfigError("stage-1 context must be positive");
    if (stage1_steps < 0 || stage2_steps < 0) throw ConfigError("step counts must be nonnegative");
    if (stage1_max_output_patches < 1 || stage2_max_output_patches < 1)
        throw ConfigError("output patch limits must be positive");
    if (batch_tasks < 1) throw ConfigError("batch must hold at least one task");
    if (warmup_frac < 0.0 || warmup_frac >= 1.0)
        throw ConfigError("warmup fraction must lie in [0, 1)");
    if (peak_lr < 0.0) throw ConfigError("learning rate must be nonnegative");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
}

LossInputs build_loss_inputs(const data::GroupedBatch& batch, const model::ForwardResult& result) {
    LossInputs inputs;
    inputs.n_rows = result.predictions.dim(0);
    inputs.n_steps = result.predictions.dim(1);
    inputs.targets.assign(static_cast<size_t>(inputs.n_rows) * inputs.n_steps, 0.0);
    inputs.mask.assign(inputs.targets.size(), 0.0);

    for (size_t r = 0; r < batch.rows.size(); ++r) {
        const auto& row = batch.rows[r];
        if (row.role != data::Role::target || row.future_truth.empty()) continue;
        const auto& norms = result.row_norms[r];
        for (int s = 0; s < batch.h && s < inputs.n_steps; ++s) {
            const double v = row.future_truth[static_cast<size_t>(s)];
            if (is_missing(v)) continue;
            const size_t idx = r * static_cast<size_t>(inputs.n_steps) + static_cast<size_t>(s);
            inputs.targets[idx] = tokenizer::normalize(v, norms.mu[0], norms.sigma[0]);
            inputs.mask[idx] = 1.0;
        }
    }
    return inputs;
}

nn::Tensor pinball_loss(const nn::Tensor& predictions, const LossInputs& inputs,
                        const std::vector<double>& levels) {
    if (predictions.shape().size() != 3) throw Error("predictions must be (rows, steps, levels)");
    const int b = predictions.dim(0);
    const int s = predictions.dim(1);
    const int nq = predictions.dim(2);
    if (b != inputs.n_rows || s != inputs.n_steps)
        throw Error("loss inputs do not match the prediction shape");
    if (nq != static_cast<int>(levels.size()))
        throw Error("quantile level count does not match predictions");

    double count = 0.0;
    for (double m : inputs.mask) count += m;
    if (count == 0.0) throw Error("no supervised targets in batch");

    const auto& pred = predictions.values();
    double total = 0.0;
    for (int i = 0; i < b * s; ++i) {
        if (inputs.mask[static_cast<size_t>(i)] == 0.0) continue;
        const double z = inputs.targets[static_cast<size_t>(i)];
        for (int q = 0; q < nq; ++q) {
            const double zq = pred[static_cast<size_t>(i) * nq + static_cast<size_t>(q)];
            const double level = levels[static_cast<size_t>(q)];
            total += zq < z ? level * (z - zq) : (1.0 - level) * (zq - z);
        }
    }

    auto pn = predictions.node();
    // Copies keep the loss node self-contained if the caller's buffers die.
    return nn::make_op(
        {1}, {total / count}, {predictions},
        [pn, inputs, levels, nq, count](nn::Node& node) {
            if (!pn->requires_grad) return;
            pn->ensure_grad();
            const double upstream = node.grad[0];
            for (size_t i = 0; i < inputs.mask.size(); ++i) {
                if (inputs.mask[i] == 0.0) continue;
                const double z = inputs.targets[i];
                for (int q = 0; q < nq; ++q) {
                    const size_t idx = i * static_cast<size_t>(nq) + static_cast<size_t>(q);
                    const double level = levels[static_cast<size_t>(q)];
                    const double slope = pn->value[idx] > z ? 1.0 - level : -level;
                    pn->grad[idx] += upstream * slope / count;
                }
            }
        });
}

int draw_task_category(const TrainConfig& config, Rng& rng) {
    return rng.categorical({config.mix_univariate, config.mix_multivariate, config.mix_covariate});
}

data::GroupedBatch sample_training_batch(const TrainConfig& config, int context_len,
                                         int max_output_patches, int patch_len, Rng& rng) {
    const int n_patches = static_cast<int>(rng.uniform_int(1, max_output_patches));
    const int h =
        static_cast<int>(rng.uniform_int((n_patches - 1) * patch_len + 1, n_patches * patch_len));
    // The generators need at least 8 points of history, so the window draws
    // are floored there even for tiny patch lengths.
    const int t_lo = std::max(8, std::min(2 * patch_len, context_len));
    const int t_hi = static_cast<int>(rng.uniform_int(t_lo, std::max(t_lo, context_len)));

    std::vector<data::ForecastTask> tasks;
    for (int i = 0; i < config.batch_tasks; ++i) {
        const std::string task_id = "train-" + std::to_string(i);
        const int t_i =
            static_cast<int>(rng.uniform_int(std::max({patch_len, 8, t_hi / 2}), t_hi));
        const int total = t_i + h;
        switch (draw_task_category(config, rng)) {
            case 0: {
                Matrix series(total, 1);
                const auto values = synth::sample_univariate_series(total, rng);
                for (int t = 0; t < total; ++t) series.at(t, 0) = values[static_cast<size_t>(t)];
                tasks.push_back(synth::task_from_series(series, h, task_id, "H"));
                break;
            }
            case 1: {
                const int dims = static_cast<int>(rng.uniform_int(2, 4));
                const Matrix series = synth::sample_multivariate_series(total, dims, rng);
                const int n_past = static_cast<int>(rng.uniform_int(0, dims - 2));
                tasks.push_back(
                    synth::make_covariate_task(series, h, 0, n_past, rng, task_id, "H"));
                break;
            }
            default: {
                if (rng.bernoulli(0.8)) {
                    synth::DriverTaskSpec spec;
                    spec.n_drivers = static_cast<int>(rng.uniform_int(1, 4));
                    // Inferring driver weights in context needs a history long
                    // enough to estimate them and a horizon with enough
                    // supervised steps, so driver windows are biased long and
                    // the weight signs lean positive; see DriverTaskSpec.
                    const int d_lo =
                        std::max(8, std::min(context_len, std::max(3 * patch_len, 48)));
                    spec.history =
                        static_cast<int>(rng.uniform_int(d_lo, std::max(d_lo, context_len)));
                    const int h_cap = max_output_patches * patch_len;
                    spec.horizon =
                        static_cast<int>(rng.uniform_int(std::min(8, h_cap), h_cap));
                    spec.p_negative = 0.3;
                    tasks.push_back(synth::make_driver_task(spec, rng, task_id));
                } else {
                    const int dims = static_cast<int>(rng.uniform_int(2, 4));
                    const Matrix series = synth::sample_multivariate_series(total, dims, rng);
                    const int n_known = static_cast<int>(rng.uniform_int(1, dims - 1));
                    const int n_past =
                        static_cast<int>(rng.uniform_int(0, dims - 1 - n_known));
                    tasks.push_back(synth::make_covariate_task(series, h, n_known, n_past, rng,
                                                               task_id, "H"));
                }
                break;
            }
        }
    }
    return data::assemble_batch(tasks, data::InferenceMode::covariate_informed);
}

void adamw_step(model::Parameters& params, OptimizerState& state, const OptimizerConfig& config,
                double lr) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (const auto& name : params.names) {
        auto& tensor = params.at(name);
        const auto& grad = tensor.grad();
        auto& values = tensor.values();
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.size() != values.size()) m.assign(values.size(), 0.0);
        if (v.size() != values.size()) v.assign(values.size(), 0.0);
        const bool decay = tensor.shape().size() >= 2 && config.weight_decay > 0.0;
        for (size_t i = 0; i < values.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            double update = lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.eps);
            if (decay) update += lr * config.weight_decay * values[i];
            values[i] -= update;
        }
    }
}

double lr_at(int step, int total_steps, double peak_lr, double warmup_frac) {
    const int warmup = std::max(1, static_cast<int>(total_steps * warmup_frac));
    if (step < warmup) return peak_lr * (step + 1) / warmup;
    const double progress =
        static_cast<double>(step - warmup) / std::max(1, total_steps - warmup);
    return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double train_step(model::Parameters& params, const data::GroupedBatch& batch,
                  const model::ModelConfig& model_config, const TrainConfig& config,
                  OptimizerState& state, double lr) {
    const auto result = model::forward(batch, params, model_config);
    const auto inputs = build_loss_inputs(batch, result);
    auto loss = pinball_loss(result.predictions, inputs, model_config.quantile_levels);
    const double value = loss.item();
    if (!std::isfinite(value))
        throw Error("non-finite loss at optimizer step " + std::to_string(state.step));
    params.zero_grad();
    loss.backward();
    OptimizerConfig opt;
    opt.weight_decay = config.weight_decay;
    adamw_step(params, state, opt, lr);
    return value;
}

data::GroupedBatch sample_pool_batch(const std::vector<data::ForecastTask>& pool,
                                     const TrainConfig& config, int context_len,
                                     int max_output_patches, int patch_len, Rng& rng) {
    if (pool.empty()) throw Error("training pool is empty");
    const int h_cap = max_output_patches * patch_len;

    std::vector<data::ForecastTask> tasks;
    tasks.reserve(static_cast<size_t>(config.batch_tasks));
    for (int i = 0; i < config.batch_tasks; ++i) {
        data::ForecastTask task =
            pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
        if (task.ground_truth.empty())
            throw Error("pool task " + task.task_id + " has no ground truth to train on");

        if (task.horizon > h_cap) {
            Matrix truth(h_cap, task.ground_truth.cols());
            for (int s = 0; s < h_cap; ++s)
                for (int d = 0; d < truth.cols(); ++d) truth.at(s, d) = task.ground_truth.at(s, d);
            if (task.covariates.cols() > 0) {
                Matrix cov(task.targets.rows() + h_cap, task.covariates.cols());
                for (int s = 0; s < cov.rows(); ++s)
                    for (int m = 0; m < cov.cols(); ++m) cov.at(s, m) = task.covariates.at(s, m);
                task.covariates = std::move(cov);
            }
            task.ground_truth = std::move(truth);
            task.horizon = h_cap;
        }
        if (task.targets.rows() > context_len) {
            const int drop = task.targets.rows() - context_len;
            Matrix targets(context_len, task.targets.cols());
            for (int s = 0; s < context_len; ++s)
                for (int d = 0; d < targets.cols(); ++d)
                    targets.at(s, d) = task.targets.at(drop + s, d);
            if (task.covariates.cols() > 0) {
                Matrix cov(context_len + task.horizon, task.covariates.cols());
                for (int s = 0; s < cov.rows(); ++s)
                    for (int m = 0; m < cov.cols(); ++m)
                        cov.at(s, m) = task.covariates.at(drop + s, m);
                task.covariates = std::move(cov);
            }
            task.targets = std::move(targets);
        }
        tasks.push_back(std::move(task));
    }
    return data::assemble_batch(tasks, data::InferenceMode::covariate_informed);
}

namespace {

using BatchSampler = std::function<data::GroupedBatch(int context_len, int max_output_patches,
                                                      Rng& rng)>;

std::vector<StepRecord> run_curriculum_impl(model::Parameters& params,
                                            const model::ModelConfig& model_config,
                                            const TrainConfig& config, OptimizerState& state,
                                            int start_step, int end_step,
                                            const StepCallback& on_step,
                                            const BatchSampler& sampler) {
    config.validate();
    if (model_config.max_context < config.stage2_context)
        throw ConfigError("model context is shorter than the stage-2 curriculum");
    if (model_config.max_output_patches < config.stage2_max_output_patches)
        throw ConfigError("model output patch limit is below the stage-2 curriculum");

    const int total = config.total_steps();
    if (end_step < 0 || end_step > total) end_step = total;
    std::vector<StepRecord> log;
    for (int step = start_step; step < end_step; ++step) {
        const bool stage2 = step >= config.stage1_steps;
        Rng rng(Rng::mix(config.seed, static_cast<uint64_t>(step)));
        const auto batch =
            sampler(stage2 ? config.stage2_context : config.stage1_context,
                    stage2 ? config.stage2_max_output_patches : config.stage1_max_output_patches,
                    rng);
        const double lr = lr_at(step, total, config.peak_lr, config.warmup_frac);

        StepRecord record;
        record.step = step;
        record.stage = stage2 ? 2 : 1;
        record.lr = lr;
        record.loss = train_step(params, batch, model_config, config, state, lr);
        log.push_back(record);
        if (on_step) on_step(record);
    }
    return log;
}

}  // namespace

std::vector<StepRecord> run_curriculum(model::Parameters& params,
                                       const model::ModelConfig& model_config,
                                       const TrainConfig& config, OptimizerState& state,
                                       int start_step, int end_step, const StepCallback& on_step) {
    return run_curriculum_impl(params, model_config, config, state, start_step, end_step, on_step,
                               [&](int context_len, int max_output_patches, Rng& rng) {
                                   return sample_training_batch(config, context_len,
                                                                max_output_patches,
                                                                model_config.patch_len, rng);
                               });
}

std::vector<StepRecord> run_curriculum(model::Parameters& params,
                                       const model::ModelConfig& model_config,
                                       const TrainConfig& config,
                                       const std::vector<data::ForecastTask>& pool,
                                       OptimizerState& state, int start_step, int end_step,
                                       const StepCallback& on_step) {
    return run_curriculum_impl(params, model_config, config, state, start_step, end_step, on_step,
                               [&](int context_len, int max_output_patches, Rng& rng) {
                                   return sample_pool_batch(pool, config, context_len,
                                                            max_output_patches,
                                                            model_config.patch_len, rng);
                               });
}

}  // namespace groupcast::training
