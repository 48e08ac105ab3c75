#include "doctest.h"

#include "groupcast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace groupcast;
using namespace groupcast::synth;

namespace {

double mean_of(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    return m / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

double autocorr(const std::vector<double>& x, int lag) {
    const double m = mean_of(x);
    double num = 0.0;
    double den = 0.0;
    for (size_t t = 0; t + static_cast<size_t>(lag) < x.size(); ++t)
        num += (x[t] - m) * (x[t + static_cast<size_t>(lag)] - m);
    for (double v : x) den += (v - m) * (v - m);
    return num / den;
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double num = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(va * vb);
}

std::vector<double> column_of(const Matrix& m, int col) {
    std::vector<double> out(static_cast<size_t>(m.rows()));
    for (int t = 0; t < m.rows(); ++t) out[static_cast<size_t>(t)] = m.at(t, col);
    return out;
}

// Solves the small normal-equation system for y ~ X w by Gaussian elimination.
std::vector<double> least_squares(const Matrix& x, const std::vector<double>& y) {
    const int k = x.cols();
    std::vector<std::vector<double>> a(static_cast<size_t>(k),
                                       std::vector<double>(static_cast<size_t>(k + 1), 0.0));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j)
            for (int t = 0; t < x.rows(); ++t)
                a[static_cast<size_t>(i)][static_cast<size_t>(j)] += x.at(t, i) * x.at(t, j);
        for (int t = 0; t < x.rows(); ++t)
            a[static_cast<size_t>(i)][static_cast<size_t>(k)] += x.at(t, i) * y[static_cast<size_t>(t)];
    }
    for (int col = 0; col < k; ++col) {
        int pivot = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(a[static_cast<size_t>(r)][static_cast<size_t>(col)]) >
                std::abs(a[static_cast<size_t>(pivot)][static_cast<size_t>(col)]))
                pivot = r;
        std::swap(a[static_cast<size_t>(col)], a[static_cast<size_t>(pivot)]);
        for (int r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<size_t>(r)][static_cast<size_t>(col)] /
                             a[static_cast<size_t>(col)][static_cast<size_t>(col)];
            for (int c = col; c <= k; ++c)
                a[static_cast<size_t>(r)][static_cast<size_t>(c)] -=
                    f * a[static_cast<size_t>(col)][static_cast<size_t>(c)];
        }
    }
    std::vector<double> w(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        w[static_cast<size_t>(i)] =
            a[static_cast<size_t>(i)][static_cast<size_t>(k)] / a[static_cast<size_t>(i)][static_cast<size_t>(i)];
    return w;
}

}  // namespace

TEST_CASE("generators are pure functions of spec and seed") {
    {
        TsiSpec spec;
        Rng r1(42), r2(42);
        CHECK(gen_tsi(spec, r1).series == gen_tsi(spec, r2).series);
    }
    {
        TcmSpec spec;
        Rng r1(42), r2(42);
        auto a = gen_tcm(spec, r1);
        auto b = gen_tcm(spec, r2);
        REQUIRE(a.series.rows() == b.series.rows());
        for (int t = 0; t < a.series.rows(); ++t)
            for (int j = 0; j < a.series.cols(); ++j) CHECK(a.series.at(t, j) == b.series.at(t, j));
    }
    {
        ArSpec spec;
        Rng r1(42), r2(42);
        CHECK(gen_ar(spec, r1) == gen_ar(spec, r2));
    }
    {
        EtsSpec spec;
        Rng r1(42), r2(42);
        CHECK(gen_ets(spec, r1).series == gen_ets(spec, r2).series);
    }
    {
        KernelSynthSpec spec;
        spec.length = 64;
        Rng r1(42), r2(42);
        CHECK(gen_kernelsynth(spec, r1) == gen_kernelsynth(spec, r2));
    }
}

TEST_CASE("generators reject degenerate lengths") {
    TsiSpec spec;
    spec.length = 4;
    Rng rng(1);
    CHECK_THROWS_AS(gen_tsi(spec, rng), Error);
}

TEST_CASE("a pure sinusoid's autocorrelation peaks at its period") {
    TsiSpec spec;
    spec.length = 256;
    spec.trend = TrendKind::linear;
    spec.trend_scale = 0.0;
    spec.sinusoids = std::vector<Sinusoid>{{12.0, 1.0, 0.3}};
    spec.noise = NoiseKind::gaussian;
    spec.noise_scale = 0.0;
    spec.multiplicative = false;
    Rng rng(1);
    auto result = gen_tsi(spec, rng);

    int best_lag = 1;
    double best = -2.0;
    for (int lag = 1; lag <= 24; ++lag) {
        const double r = autocorr(result.series, lag);
        if (r > best) {
            best = r;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 12);
    CHECK(best > 0.9);
}

TEST_CASE("a positive linear trend alone gives a strictly increasing series") {
    TsiSpec spec;
    spec.length = 64;
    spec.trend = TrendKind::linear;
    spec.trend_scale = 2.5;
    spec.sinusoids = std::vector<Sinusoid>{};
    spec.noise = NoiseKind::gaussian;
    spec.noise_scale = 0.0;
    spec.multiplicative = false;
    Rng rng(2);
    auto result = gen_tsi(spec, rng);
    for (size_t t = 1; t < result.series.size(); ++t)
        CHECK(result.series[t] > result.series[t - 1]);
}

TEST_CASE("an edgeless one-variable graph simulates to white noise") {
    CausalGraph graph;
    graph.n_vars = 1;
    graph.max_lag = 1;
    graph.noise_scales = {1.0};
    TcmSpec spec;
    spec.n_vars = 1;
    spec.length = 8192;
    spec.graph = graph;
    Rng rng(3);
    auto result = gen_tcm(spec, rng);
    auto series = column_of(result.series, 0);
    CHECK(std::abs(mean_of(series)) < 0.05);
    CHECK(var_of(series) == doctest::Approx(1.0).epsilon(0.07));
    CHECK(std::abs(autocorr(series, 1)) < 0.05);
}

TEST_CASE("every emitted causal graph has a stable companion matrix") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        TcmSpec spec;
        spec.n_vars = 4;
        spec.length = 64;
        auto result = gen_tcm(spec, rng);
        CHECK(companion_spectral_radius(result.graph) <= 0.95 + 1e-12);
    }
}

TEST_CASE("rescaling lands the spectral radius at the target") {
    CausalGraph graph;
    graph.n_vars = 1;
    graph.max_lag = 1;
    graph.noise_scales = {1.0};
    graph.edges = {{0, 0, 1, 2.0}};
    CHECK(companion_spectral_radius(graph) == doctest::Approx(2.0));
    auto scaled = rescale_to_stable(graph);
    const double radius = companion_spectral_radius(scaled);
    CHECK(radius <= 0.95);
    CHECK(radius > 0.9499);
}

TEST_CASE("a single lagged edge shows up as cross-correlation at its lag") {
    CausalGraph graph;
    graph.n_vars = 2;
    graph.max_lag = 2;
    graph.noise_scales = {1.0, 1.0};
    graph.edges = {{0, 1, 2, 0.6}};
    TcmSpec spec;
    spec.n_vars = 2;
    spec.length = 4000;
    spec.graph = graph;
    Rng rng(4);
    auto result = gen_tcm(spec, rng);

    std::vector<double> lagged_src, dst;
    for (int t = 2; t < result.series.rows(); ++t) {
        lagged_src.push_back(result.series.at(t - 2, 0));
        dst.push_back(result.series.at(t, 1));
    }
    // corr = c / sqrt(c^2 + 1) = 0.514 for c = 0.6.
    CHECK(corr(lagged_src, dst) > 0.4);
    // The un-lagged pairing carries no signal.
    CHECK(std::abs(corr(column_of(result.series, 0), column_of(result.series, 1))) < 0.1);
}

TEST_CASE("levinson recursion reproduces hand-computed coefficients") {
    const auto one = ar_from_partials({0.7});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 0.7);

    const double k1 = 0.5, k2 = -0.3;
    const auto two = ar_from_partials({k1, k2});
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(k1 * (1.0 - k2)));
    CHECK(two[1] == doctest::Approx(k2));

    CHECK_THROWS_AS(ar_from_partials({1.0}), Error);
}

TEST_CASE("zero-coefficient AR is white noise at the configured scale") {
    ArSpec spec;
    spec.length = 20000;
    spec.coeffs = std::vector<double>{0.0, 0.0, 0.0};
    spec.sigma = 2.0;
    Rng rng(5);
    auto series = gen_ar(spec, rng);
    CHECK(std::sqrt(var_of(series)) == doctest::Approx(2.0).epsilon(0.03));
    CHECK(std::abs(autocorr(series, 1)) < 0.03);
}

TEST_CASE("autoregressive outputs stay bounded over long runs") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        ArSpec ar;
        ar.length = 10000;
        auto series = gen_ar(ar, rng);
        for (double v : series) CHECK(std::abs(v) < 50.0);

        TcmSpec tcm;
        tcm.n_vars = 3;
        tcm.length = 10000;
        auto result = gen_tcm(tcm, rng);
        for (int t = 0; t < result.series.rows(); ++t)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(result.series.at(t, j)) < 75.0);
    }
}

TEST_CASE("full level smoothing without trend or season is a random walk") {
    EtsSpec spec;
    spec.length = 512;
    spec.alpha = 1.0;
    spec.beta = 0.0;
    spec.gamma = 0.0;
    spec.sigma = 1.5;
    Rng rng(6);
    auto result = gen_ets(spec, rng);
    for (size_t t = 1; t < result.series.size(); ++t)
        CHECK(std::abs(result.series[t] - result.series[t - 1] - result.innovations[t]) < 1e-10);
}

TEST_CASE("smoothing parameters outside the admissible region are rejected") {
    Rng rng(7);
    EtsSpec spec;
    spec.alpha = 1.5;
    CHECK_THROWS_AS(gen_ets(spec, rng), Error);
    spec.alpha = 0.8;
    spec.beta = 0.9;
    CHECK_THROWS_AS(gen_ets(spec, rng), Error);
    spec.beta = 0.1;
    spec.gamma = 0.5;
    CHECK_THROWS_AS(gen_ets(spec, rng), Error);
}

TEST_CASE("gaussian-process draws reproduce the kernel as their covariance") {
    const auto kernel = se_kernel(0.3);
    const int length = 8;
    const auto xs = gp_input_grid(length);
    Rng rng(8);
    const int draws = 1200;
    std::vector<std::vector<double>> samples;
    for (int d = 0; d < draws; ++d) samples.push_back(gp_sample(kernel, length, rng));

    for (int i = 0; i < length; ++i)
        for (int j = 0; j <= i; ++j) {
            double emp = 0.0;
            for (const auto& s : samples)
                emp += s[static_cast<size_t>(i)] * s[static_cast<size_t>(j)];
            emp /= draws;
            CHECK(std::abs(emp - kernel(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)])) < 0.15);
        }
}

TEST_CASE("bank kernels have unit diagonal and periodic structure") {
    const auto periodic = periodic_kernel(1.0, 0.25);
    CHECK(periodic(0.3, 0.3) == doctest::Approx(1.0));
    CHECK(periodic(0.1, 0.35) == doctest::Approx(1.0));
    const auto se = se_kernel(0.2);
    CHECK(se(0.4, 0.4) == doctest::Approx(1.0));
    CHECK(se(0.0, 1.0) < 0.01);
}

TEST_CASE("sampled mixing matrices have unit spectral norm") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = sample_mixing_matrix(5, rng);
        // Power iteration on A^T A gives the largest singular value squared.
        std::vector<double> v(5, 1.0);
        double sigma_sq = 0.0;
        for (int it = 0; it < 300; ++it) {
            std::vector<double> av(5, 0.0), w(5, 0.0);
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 5; ++j) av[static_cast<size_t>(i)] += a.at(i, j) * v[static_cast<size_t>(j)];
            for (int j = 0; j < 5; ++j)
                for (int i = 0; i < 5; ++i) w[static_cast<size_t>(j)] += a.at(i, j) * av[static_cast<size_t>(i)];
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            sigma_sq = norm;
            for (size_t i = 0; i < 5; ++i) v[i] = w[i] / norm;
        }
        CHECK(std::sqrt(sigma_sq) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("identity and duplicated-row mixing behave as expected") {
    Rng rng(10);
    Matrix base(32, 3);
    for (int t = 0; t < 32; ++t)
        for (int j = 0; j < 3; ++j) base.at(t, j) = rng.normal();

    Matrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    const Matrix same = apply_cotemporaneous(base, eye, false, 1.0);
    for (int t = 0; t < 32; ++t)
        for (int j = 0; j < 3; ++j) CHECK(same.at(t, j) == base.at(t, j));

    Matrix dup(3, 3);
    for (int j = 0; j < 3; ++j) {
        dup.at(0, j) = 0.3 * (j + 1);
        dup.at(1, j) = 0.3 * (j + 1);
        dup.at(2, j) = j == 2 ? 1.0 : 0.0;
    }
    const Matrix mixed = apply_cotemporaneous(base, dup, false, 1.0);
    for (int t = 0; t < 32; ++t) CHECK(mixed.at(t, 0) == mixed.at(t, 1));
}

TEST_CASE("cotemporaneous mixing raises average pairwise correlation") {
    double base_total = 0.0;
    double mixed_total = 0.0;
    for (uint64_t trial = 0; trial < 100; ++trial) {
        Rng rng(trial);
        Matrix base(300, 3);
        for (int t = 0; t < 300; ++t)
            for (int j = 0; j < 3; ++j) base.at(t, j) = rng.normal();
        const Matrix mixed = apply_cotemporaneous(base, sample_mixing_matrix(3, rng), false, 1.0);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                base_total += std::abs(corr(column_of(base, i), column_of(base, j)));
                mixed_total += std::abs(corr(column_of(mixed, i), column_of(mixed, j)));
            }
    }
    CHECK(mixed_total > base_total);
}

TEST_CASE("a pure one-step lag matrix shifts the series exactly") {
    Rng rng(11);
    Matrix base(20, 2);
    for (int t = 0; t < 20; ++t)
        for (int j = 0; j < 2; ++j) base.at(t, j) = rng.normal();
    Matrix eye(2, 2);
    eye.at(0, 0) = 1.0;
    eye.at(1, 1) = 1.0;
    const Matrix out = apply_leadlag(base, {eye}, 0.0, rng);
    for (int j = 0; j < 2; ++j) CHECK(out.at(0, j) == 0.0);
    for (int t = 1; t < 20; ++t)
        for (int j = 0; j < 2; ++j) CHECK(out.at(t, j) == base.at(t - 1, j));
}

TEST_CASE("zero lag matrices leave only the idiosyncratic noise") {
    Rng rng(12);
    Matrix base(2000, 2);
    for (int t = 0; t < 2000; ++t)
        for (int j = 0; j < 2; ++j) base.at(t, j) = rng.normal();
    const Matrix zero(2, 2);

    const Matrix silent = apply_leadlag(base, {zero}, 0.0, rng);
    for (int t = 0; t < 2000; ++t)
        for (int j = 0; j < 2; ++j) CHECK(silent.at(t, j) == 0.0);

    const Matrix noisy = apply_leadlag(base, {zero}, 1.0, rng);
    std::vector<double> flat;
    for (int t = 0; t < 2000; ++t)
        for (int j = 0; j < 2; ++j) flat.push_back(noisy.at(t, j));
    CHECK(var_of(flat) == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("cointegrated outputs wander together") {
    Rng rng(13);
    const Matrix y = gen_cointegrated(2000, 3, rng);
    const auto y0 = column_of(y, 0);

    std::vector<double> diff(2000);
    for (int t = 0; t < 2000; ++t) diff[static_cast<size_t>(t)] = y.at(t, 0) - y.at(t, 1);

    const std::vector<double> head_level(y0.begin(), y0.begin() + 500);
    const std::vector<double> head_diff(diff.begin(), diff.begin() + 500);
    // Levels keep wandering while the spread stays put.
    CHECK(var_of(y0) / var_of(head_level) > 2.0);
    CHECK(var_of(diff) / var_of(head_diff) < 2.0);
    CHECK(var_of(diff) * 5.0 < var_of(y0));
}

TEST_CASE("multivariatizers preserve shape and introduce no missing values") {
    for (MixKind kind : {MixKind::cotemporaneous_linear, MixKind::cotemporaneous_nonlinear,
                         MixKind::sequential_leadlag, MixKind::sequential_cointegration}) {
        Rng rng(14);
        Matrix base(64, 2);
        for (int t = 0; t < 64; ++t)
            for (int j = 0; j < 2; ++j) base.at(t, j) = rng.normal();
        MultivariatizerSpec spec;
        spec.kind = kind;
        const Matrix out = multivariatize(base, spec, rng);
        CHECK(out.rows() == 64);
        CHECK(out.cols() == 2);
        for (int t = 0; t < 64; ++t)
            for (int j = 0; j < 2; ++j) {
                CHECK(!is_missing(out.at(t, j)));
                CHECK(std::isfinite(out.at(t, j)));
            }
    }
    Rng rng(15);
    Matrix narrow(64, 1);
    MultivariatizerSpec spec;
    CHECK_THROWS_AS(multivariatize(narrow, spec, rng), Error);
}

TEST_CASE("series-to-task splitting keeps history and future aligned") {
    Rng rng(16);
    Matrix series(10, 2);
    for (int t = 0; t < 10; ++t)
        for (int j = 0; j < 2; ++j) series.at(t, j) = rng.normal();
    const auto task = task_from_series(series, 3, "split", "D");
    CHECK(task.horizon == 3);
    CHECK(task.targets.rows() == 7);
    CHECK(task.ground_truth.rows() == 3);
    for (int t = 0; t < 7; ++t)
        for (int j = 0; j < 2; ++j) CHECK(task.targets.at(t, j) == series.at(t, j));
    for (int t = 0; t < 3; ++t)
        for (int j = 0; j < 2; ++j) CHECK(task.ground_truth.at(t, j) == series.at(7 + t, j));
    CHECK_THROWS_AS(task_from_series(series, 10, "bad", "D"), Error);
}

TEST_CASE("covariate task construction assigns roles and preserves values") {
    Rng rng(17);
    Matrix series(24, 2);
    for (int t = 0; t < 24; ++t)
        for (int j = 0; j < 2; ++j) series.at(t, j) = rng.normal();

    const auto task = make_covariate_task(series, 4, 1, 0, rng, "cov", "D");
    CHECK(task.targets.cols() == 1);
    CHECK(task.covariates.cols() == 1);
    REQUIRE(task.covariate_roles.size() == 1);
    CHECK(task.covariate_roles[0] == data::Role::known_covariate);

    // Both the target (history + ground truth) and the covariate must be
    // columns of the original series.
    for (int col = 0; col < 2; ++col) {
        bool target_matches = true;
        bool covariate_matches = true;
        for (int t = 0; t < 20; ++t) target_matches &= task.targets.at(t, 0) == series.at(t, col);
        for (int t = 0; t < 4; ++t)
            target_matches &= task.ground_truth.at(t, 0) == series.at(20 + t, col);
        for (int t = 0; t < 24; ++t) covariate_matches &= task.covariates.at(t, 0) == series.at(t, col);
        CHECK((target_matches || covariate_matches));
    }

    CHECK_THROWS_AS(make_covariate_task(series, 4, 2, 0, rng, "cov", "D"), Error);
    CHECK_THROWS_AS(make_covariate_task(series, 4, 1, 1, rng, "cov", "D"), Error);
}

TEST_CASE("covariate role assignment is uniform across variates") {
    Matrix series(30, 4);
    for (int t = 0; t < 30; ++t)
        for (int j = 0; j < 4; ++j) series.at(t, j) = t + 100 * j;

    Rng rng(18);
    std::vector<int> known_counts(4, 0);
    for (int draw = 0; draw < 1000; ++draw) {
        const auto task = make_covariate_task(series, 5, 1, 1, rng, "u", "D");
        const double first = task.covariates.at(0, 0);
        // Values encode the variate index, so recover which one became known.
        const int variate = static_cast<int>(first / 100.0 + 0.5);
        known_counts[static_cast<size_t>(variate)] += 1;
    }
    for (int j = 0; j < 4; ++j) {
        CHECK(known_counts[static_cast<size_t>(j)] > 220);
        CHECK(known_counts[static_cast<size_t>(j)] < 280);
    }
}

TEST_CASE("driver tasks are explained by their known covariates") {
    DriverTaskSpec spec;
    spec.n_drivers = 3;
    spec.history = 200;
    spec.horizon = 24;
    Rng rng(19);
    const auto task = make_driver_task(spec, rng, "drv");
    CHECK(task.targets.cols() == 1);
    CHECK(task.covariates.cols() == 3);
    CHECK(task.covariates.rows() == 224);
    for (auto role : task.covariate_roles) CHECK(role == data::Role::known_covariate);

    Matrix history_drivers(200, 3);
    for (int t = 0; t < 200; ++t)
        for (int j = 0; j < 3; ++j) history_drivers.at(t, j) = task.covariates.at(t, j);
    const auto w = least_squares(history_drivers, column_of(task.targets, 0));

    // In-sample and out-of-sample residuals should both be at the noise floor.
    for (int t = 0; t < 200; ++t) {
        double fit = 0.0;
        for (int j = 0; j < 3; ++j) fit += w[static_cast<size_t>(j)] * task.covariates.at(t, j);
        CHECK(std::abs(task.targets.at(t, 0) - fit) < 0.25);
    }
    for (int t = 0; t < 24; ++t) {
        double fit = 0.0;
        for (int j = 0; j < 3; ++j) fit += w[static_cast<size_t>(j)] * task.covariates.at(200 + t, j);
        CHECK(std::abs(task.ground_truth.at(t, 0) - fit) < 0.25);
    }

    // The target's own past is nearly uninformative: drivers are near-white,
    // so the target's lag-1 autocorrelation stays small.
    CHECK(std::abs(autocorr(column_of(task.targets, 0), 1)) < 0.35);
}

TEST_CASE("corpus sampling is reproducible and emits valid tasks") {
    CorpusConfig config;
    config.n_tasks = 40;
    config.seed = 77;
    config.min_history = 32;
    config.max_history = 64;
    config.min_horizon = 4;
    config.max_horizon = 12;

    const auto corpus = sample_corpus(config);
    REQUIRE(corpus.size() == 40);
    bool saw_univariate = false, saw_multivariate = false, saw_covariate = false;
    for (const auto& task : corpus) {
        CHECK(data::validate_task(task).empty());
        CHECK(task.horizon >= 4);
        CHECK(task.horizon <= 12);
        CHECK(task.targets.rows() >= 32);
        CHECK(task.targets.rows() <= 64);
        CHECK(task.ground_truth.rows() == task.horizon);
        if (task.covariates.empty())
            (task.targets.cols() == 1 ? saw_univariate : saw_multivariate) = true;
        else
            saw_covariate = true;
    }
    CHECK(saw_univariate);
    CHECK(saw_multivariate);
    CHECK(saw_covariate);

    const auto again = sample_task(config, 7);
    const auto& original = corpus[7];
    CHECK(again.task_id == original.task_id);
    REQUIRE(again.targets.rows() == original.targets.rows());
    REQUIRE(again.targets.cols() == original.targets.cols());
    for (int t = 0; t < again.targets.rows(); ++t)
        for (int j = 0; j < again.targets.cols(); ++j)
            CHECK(again.targets.at(t, j) == original.targets.at(t, j));
}
