#include "doctest.h"

#include "groupcast/synthetic.hpp"
#include "groupcast/training.hpp"
#include "testutil.hpp"

#include <cmath>
#include <vector>

using namespace groupcast;
using namespace groupcast::training;
using data::InferenceMode;

namespace {

model::ModelConfig tiny_model() {
    model::ModelConfig config;
    config.patch_len = 4;
    config.d_model = 16;
    config.n_blocks = 2;
    config.n_heads = 2;
    config.max_context = 64;
    config.max_output_patches = 4;
    config.quantile_levels = {0.1, 0.5, 0.9};
    return config;
}

TrainConfig tiny_train() {
    TrainConfig config;
    config.stage1_context = 32;
    config.stage2_context = 64;
    config.stage1_steps = 3;
    config.stage2_steps = 3;
    config.stage1_max_output_patches = 2;
    config.stage2_max_output_patches = 4;
    config.batch_tasks = 2;
    config.peak_lr = 1e-3;
    config.seed = 9;
    return config;
}

LossInputs single_target(double z, int n_steps = 1) {
    LossInputs inputs;
    inputs.n_rows = 1;
    inputs.n_steps = n_steps;
    inputs.targets.assign(static_cast<size_t>(n_steps), z);
    inputs.mask.assign(static_cast<size_t>(n_steps), 1.0);
    return inputs;
}

data::GroupedBatch small_batch(uint64_t seed, int tasks = 2, int t = 20, int h = 6) {
    Rng rng(seed);
    std::vector<data::ForecastTask> list;
    for (int i = 0; i < tasks; ++i) {
        Matrix series(t + h, 1);
        for (int s = 0; s < t + h; ++s) series.at(s, 0) = rng.normal(0.0, 2.0);
        list.push_back(synth::task_from_series(series, h, "t" + std::to_string(i), "H"));
    }
    return data::assemble_batch(list, InferenceMode::covariate_informed);
}

}  // namespace

TEST_CASE("pinball loss evaluates the textbook cases") {
    auto check_value = [](double level, double target, double pred, double expected) {
        auto preds = nn::Tensor::from({1, 1, 1}, {pred}, true);
        const auto loss = pinball_loss(preds, single_target(target), {level});
        CHECK(loss.item() == doctest::Approx(expected));
    };
    check_value(0.5, 1.0, 0.0, 0.5);
    check_value(0.9, 2.0, 1.0, 0.9);
    check_value(0.9, 1.0, 2.0, 0.1);
    check_value(0.3, 1.5, 1.5, 0.0);

    // Sum over levels, mean over masked-in entries.
    auto preds = nn::Tensor::from({1, 2, 2}, {0.0, 2.0, 1.0, 1.0}, false);
    LossInputs inputs;
    inputs.n_rows = 1;
    inputs.n_steps = 2;
    inputs.targets = {1.0, 0.0};
    inputs.mask = {1.0, 0.0};
    // Only step 0 counts: 0.5*(1-0) + (1-0.9)*(2-1) = 0.6.
    const auto loss = pinball_loss(preds, inputs, {0.5, 0.9});
    CHECK(loss.item() == doctest::Approx(0.6));
}

TEST_CASE("an all-masked batch cannot be scored") {
    auto preds = nn::Tensor::from({1, 1, 1}, {0.3}, false);
    auto inputs = single_target(1.0);
    inputs.mask = {0.0};
    CHECK_THROWS_WITH_AS(pinball_loss(preds, inputs, {0.5}),
                         doctest::Contains("no supervised targets"), Error);
}

TEST_CASE("pinball gradients match finite differences and respect the mask") {
    Rng rng(3);
    auto preds = testutil::random_tensor({2, 3, 4}, rng);
    LossInputs inputs;
    inputs.n_rows = 2;
    inputs.n_steps = 3;
    inputs.targets.resize(6);
    inputs.mask = {1.0, 0.0, 1.0, 1.0, 1.0, 0.0};
    for (auto& z : inputs.targets) z = rng.normal();
    const std::vector<double> levels = {0.1, 0.4, 0.6, 0.9};

    testutil::fd_check({preds}, [&] { return pinball_loss(preds, inputs, levels); });

    preds.zero_grad();
    pinball_loss(preds, inputs, levels).backward();
    const auto& grad = preds.grad();
    for (int i = 0; i < 6; ++i)
        for (int q = 0; q < 4; ++q) {
            const double g = grad[static_cast<size_t>(i * 4 + q)];
            if (inputs.mask[static_cast<size_t>(i)] == 0.0)
                CHECK(g == 0.0);
            else
                CHECK(g != 0.0);
        }
}

TEST_CASE("loss is invariant to rescaling the raw series") {
    const auto mcfg = tiny_model();
    const auto params = model::init_parameters(mcfg, 5);

    Rng rng(6);
    Matrix series(26, 1);
    for (int t = 0; t < 26; ++t) series.at(t, 0) = rng.normal(0.0, 3.0);
    Matrix doubled(26, 1);
    for (int t = 0; t < 26; ++t) doubled.at(t, 0) = 2.0 * series.at(t, 0);

    auto eval = [&](const Matrix& m) {
        auto batch = data::assemble_batch({synth::task_from_series(m, 6, "s", "H")},
                                          InferenceMode::univariate);
        const auto result = model::forward(batch, params, mcfg);
        const auto inputs = build_loss_inputs(batch, result);
        return pinball_loss(result.predictions, inputs, mcfg.quantile_levels).item();
    };
    // Doubling is exact in floating point, so the normalized problem and the
    // loss are bit-identical.
    CHECK(eval(series) == eval(doubled));
}

TEST_CASE("task categories follow the configured mix") {
    TrainConfig config = tiny_train();
    Rng rng(7);
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 10000; ++i) counts[draw_task_category(config, rng)] += 1;
    CHECK(std::abs(counts[0] / 10000.0 - 0.4) < 0.02);
    CHECK(std::abs(counts[1] / 10000.0 - 0.3) < 0.02);
    CHECK(std::abs(counts[2] / 10000.0 - 0.3) < 0.02);
}

TEST_CASE("an all-univariate mix yields singleton groups") {
    TrainConfig config = tiny_train();
    config.mix_univariate = 1.0;
    config.mix_multivariate = 0.0;
    config.mix_covariate = 0.0;
    config.batch_tasks = 5;
    Rng rng(8);
    const auto batch = sample_training_batch(config, 32, 2, 4, rng);
    REQUIRE(batch.rows.size() == 5);
    std::vector<int> seen;
    for (const auto& row : batch.rows) {
        CHECK(row.role == data::Role::target);
        for (int g : seen) CHECK(g != row.group_id);
        seen.push_back(row.group_id);
    }
}

TEST_CASE("batch sampling is deterministic in the seed") {
    TrainConfig config = tiny_train();
    Rng r1(11), r2(11);
    const auto a = sample_training_batch(config, 32, 2, 4, r1);
    const auto b = sample_training_batch(config, 32, 2, 4, r2);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.t == b.t);
    CHECK(a.h == b.h);
    for (size_t r = 0; r < a.rows.size(); ++r) {
        CHECK(a.rows[r].group_id == b.rows[r].group_id);
        REQUIRE(a.rows[r].values.size() == b.rows[r].values.size());
        for (size_t i = 0; i < a.rows[r].values.size(); ++i) {
            const double x = a.rows[r].values[i];
            const double y = b.rows[r].values[i];
            CHECK(((is_missing(x) && is_missing(y)) || x == y));
        }
    }
}

TEST_CASE("batch horizons respect the sampled output-patch budget") {
    TrainConfig config = tiny_train();
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto batch = sample_training_batch(config, 32, 3, 4, rng);
        CHECK(batch.h >= 1);
        CHECK(batch.h <= 12);
        CHECK(batch.t <= 32);
    }
}

TEST_CASE("adam moments and decoupled decay match a hand-computed step") {
    model::ModelConfig mcfg = tiny_model();
    model::Parameters params;
    params.add("w", nn::Tensor::from({2, 1}, {1.0, -2.0}, true));
    params.add("b", nn::Tensor::from({1}, {0.5}, true));
    // Plant gradients directly.
    params.zero_grad();
    auto loss = nn::sum_all(nn::mul(params.at("w"), nn::Tensor::from({2, 1}, {3.0, -1.0}, false)));
    loss.backward();

    OptimizerConfig opt;
    opt.weight_decay = 0.1;
    OptimizerState state;
    adamw_step(params, state, opt, 0.01);

    // First step: mhat = g, vhat = g^2, so the Adam part is lr * sign(g)
    // modulo eps; the matrix also decays.
    const double adam0 = 0.01 * 3.0 / (3.0 + opt.eps);
    const double adam1 = 0.01 * (-1.0) / (1.0 + opt.eps);
    CHECK(params.at("w").values()[0] == doctest::Approx(1.0 - adam0 - 0.01 * 0.1 * 1.0));
    CHECK(params.at("w").values()[1] == doctest::Approx(-2.0 - adam1 - 0.01 * 0.1 * -2.0));
    // Vectors see no decay, and their zero gradient leaves them untouched.
    CHECK(params.at("b").values()[0] == 0.5);
    CHECK(state.step == 1);
}

TEST_CASE("learning-rate schedule ramps then decays to zero") {
    const double peak = 3e-4;
    CHECK(lr_at(0, 100, peak, 0.05) == doctest::Approx(peak / 5.0));
    CHECK(lr_at(4, 100, peak, 0.05) == doctest::Approx(peak));
    CHECK(lr_at(5, 100, peak, 0.05) == doctest::Approx(peak));
    for (int step = 6; step < 100; ++step)
        CHECK(lr_at(step, 100, peak, 0.05) < lr_at(step - 1, 100, peak, 0.05));
    CHECK(lr_at(99, 100, peak, 0.05) > 0.0);
    CHECK(lr_at(99, 100, peak, 0.05) < 0.01 * peak);
}

TEST_CASE("a zero learning rate leaves parameters bit-identical") {
    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 13);
    const auto before = params;  // shares nodes; snapshot values instead
    std::vector<std::vector<double>> snapshot;
    for (const auto& name : params.names) snapshot.push_back(params.at(name).values());

    TrainConfig tcfg = tiny_train();
    OptimizerState state;
    const auto batch = small_batch(21);
    train_step(params, batch, mcfg, tcfg, state, 0.0);

    for (size_t i = 0; i < params.names.size(); ++i)
        CHECK(params.at(params.names[i]).values() == snapshot[i]);
    CHECK(state.step == 1);
}

TEST_CASE("the reported loss matches an independent evaluation") {
    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 17);
    const auto batch = small_batch(22);

    const auto result = model::forward(batch, params, mcfg);
    const auto inputs = build_loss_inputs(batch, result);
    const double expected = pinball_loss(result.predictions, inputs, mcfg.quantile_levels).item();

    TrainConfig tcfg = tiny_train();
    OptimizerState state;
    const double reported = train_step(params, batch, mcfg, tcfg, state, 1e-3);
    CHECK(reported == expected);
}

TEST_CASE("repeated steps on one small batch overfit it") {
    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 19);
    const auto batch = small_batch(23, 2, 16, 4);

    TrainConfig tcfg = tiny_train();
    tcfg.weight_decay = 0.0;
    OptimizerState state;
    double first = 0.0;
    double last = 0.0;
    for (int step = 0; step < 200; ++step) {
        last = train_step(params, batch, mcfg, tcfg, state, 3e-3);
        if (step == 0) first = last;
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("singleton-group updates are invariant to row order") {
    const auto mcfg = tiny_model();
    auto p1 = model::init_parameters(mcfg, 29);
    auto p2 = model::init_parameters(mcfg, 29);

    Rng rng(31);
    std::vector<data::ForecastTask> tasks;
    for (int i = 0; i < 3; ++i) {
        Matrix series(24, 1);
        for (int t = 0; t < 24; ++t) series.at(t, 0) = rng.normal();
        tasks.push_back(synth::task_from_series(series, 4, "t" + std::to_string(i), "H"));
    }
    auto forward_order = data::assemble_batch(tasks, InferenceMode::univariate);
    std::swap(tasks[0], tasks[2]);
    auto reversed_order = data::assemble_batch(tasks, InferenceMode::univariate);

    TrainConfig tcfg = tiny_train();
    OptimizerState s1, s2;
    train_step(p1, forward_order, mcfg, tcfg, s1, 1e-3);
    train_step(p2, reversed_order, mcfg, tcfg, s2, 1e-3);

    for (const auto& name : p1.names) {
        const auto& a = p1.at(name).values();
        const auto& b = p2.at(name).values();
        for (size_t i = 0; i < a.size(); ++i)
            CHECK(std::abs(a[i] - b[i]) <=
                  1e-9 * std::max({std::abs(a[i]), std::abs(b[i]), 1.0}));
    }
}

TEST_CASE("the curriculum logs every step and widens stage-2 contexts") {
    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 37);
    TrainConfig tcfg = tiny_train();
    OptimizerState state;
    const auto log = run_curriculum(params, mcfg, tcfg, state);
    REQUIRE(log.size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(log[static_cast<size_t>(i)].step == i);
        CHECK(log[static_cast<size_t>(i)].stage == (i < 3 ? 1 : 2));
        CHECK(std::isfinite(log[static_cast<size_t>(i)].loss));
    }

    // Stage-2 sampling can exceed the stage-1 context cap.
    bool saw_long = false;
    for (uint64_t seed = 0; seed < 20 && !saw_long; ++seed) {
        Rng rng(seed);
        const auto batch =
            sample_training_batch(tcfg, tcfg.stage2_context, 4, mcfg.patch_len, rng);
        saw_long = batch.t > tcfg.stage1_context;
    }
    CHECK(saw_long);
}

TEST_CASE("resuming mid-run reproduces the remaining trajectory bit-exactly") {
    const auto mcfg = tiny_model();
    TrainConfig tcfg = tiny_train();

    auto p_full = model::init_parameters(mcfg, 41);
    OptimizerState s_full;
    const auto full = run_curriculum(p_full, mcfg, tcfg, s_full);

    auto p_split = model::init_parameters(mcfg, 41);
    OptimizerState s_split;
    const auto head = run_curriculum(p_split, mcfg, tcfg, s_split, 0, 4);
    const auto tail = run_curriculum(p_split, mcfg, tcfg, s_split, 4);

    REQUIRE(head.size() + tail.size() == full.size());
    for (size_t i = 0; i < head.size(); ++i) CHECK(head[i].loss == full[i].loss);
    for (size_t i = 0; i < tail.size(); ++i) CHECK(tail[i].loss == full[head.size() + i].loss);
    for (const auto& name : p_full.names)
        CHECK(p_full.at(name).values() == p_split.at(name).values());
}

TEST_CASE("pool batches trim tasks to the stage budget and stay deterministic") {
    Rng gen(43);
    std::vector<data::ForecastTask> pool;
    for (int i = 0; i < 4; ++i) {
        Matrix series(90 + 10 * i, 2);
        for (int s = 0; s < series.rows(); ++s)
            for (int d = 0; d < 2; ++d) series.at(s, d) = gen.normal();
        pool.push_back(synth::make_covariate_task(series, 20, 1, 0, gen,
                                                  "pool-" + std::to_string(i), "H"));
    }

    TrainConfig tcfg = tiny_train();
    tcfg.batch_tasks = 3;
    Rng r1(6), r2(6);
    const auto a = sample_pool_batch(pool, tcfg, 32, 2, 4, r1);
    const auto b = sample_pool_batch(pool, tcfg, 32, 2, 4, r2);
    CHECK(a.t <= 32);
    CHECK(a.h <= 8);
    CHECK(a.rows.size() == b.rows.size());
    for (size_t r = 0; r < a.rows.size(); ++r) {
        CHECK(a.rows[r].group_id == b.rows[r].group_id);
        CHECK(a.rows[r].orig_t == b.rows[r].orig_t);
    }
    // Supervision survives the horizon trim.
    bool any_truth = false;
    for (const auto& row : a.rows)
        if (row.role == data::Role::target && !row.future_truth.empty()) any_truth = true;
    CHECK(any_truth);

    std::vector<data::ForecastTask> bare = {synth::task_from_series(
        [&] {
            Matrix m(30, 1);
            for (int s = 0; s < 30; ++s) m.at(s, 0) = gen.normal();
            return m;
        }(),
        5, "bare", "H")};
    bare[0].ground_truth = Matrix();
    Rng r3(1);
    CHECK_THROWS_WITH_AS(sample_pool_batch(bare, tcfg, 32, 2, 4, r3),
                         doctest::Contains("no ground truth"), Error);

    // The pool-backed curriculum trains and logs exactly like the synthetic one.
    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 3);
    OptimizerState state;
    const auto log = run_curriculum(params, mcfg, tcfg, pool, state);
    REQUIRE(log.size() == static_cast<size_t>(tcfg.total_steps()));
    for (const auto& rec : log) CHECK(std::isfinite(rec.loss));
}

TEST_CASE("training configuration violations are rejected") {
    TrainConfig config = tiny_train();
    config.mix_univariate = 0.9;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = tiny_train();
    config.stage2_context = config.stage1_context - 1;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = tiny_train();
    config.warmup_frac = 1.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    const auto mcfg = tiny_model();
    auto params = model::init_parameters(mcfg, 1);
    OptimizerState state;
    config = tiny_train();
    config.stage2_context = mcfg.max_context + 64;
    CHECK_THROWS_AS(run_curriculum(params, mcfg, config, state), ConfigError);
}
