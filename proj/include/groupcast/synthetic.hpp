#pragma once

#include "groupcast/common.hpp"
#include "groupcast/data_model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace groupcast::synth {

// ---------------------------------------------------------------------------
// Trend + seasonality + irregularity generator.
//
// Unset optional fields are sampled from built-in ranges, so a corpus build
// can leave everything to the rng while a test pins a single component.
// ---------------------------------------------------------------------------

enum class TrendKind { linear, exponential, logistic };
enum class NoiseKind { gaussian, ar1 };

struct Sinusoid {
    double period = 24.0;  // in steps
    double amplitude = 1.0;
    double phase = 0.0;
};

struct TsiSpec {
    int length = 256;
    std::optional<TrendKind> trend;
    std::optional<double> trend_scale;  // total change over the window
    std::optional<std::vector<Sinusoid>> sinusoids;  // empty vector = none
    std::optional<NoiseKind> noise;
    std::optional<double> noise_scale;
    std::optional<bool> multiplicative;
};

// Components are returned separately; `series` is their combination.
struct TsiResult {
    std::vector<double> series;
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> irregular;
    bool multiplicative = false;
};

TsiResult gen_tsi(const TsiSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Temporal causal model: a sampled lagged graph simulated as a VAR.
// ---------------------------------------------------------------------------

struct TcmEdge {
    int src = 0;
    int dst = 0;
    int lag = 1;
    double coeff = 0.0;
};

struct CausalGraph {
    int n_vars = 0;
    int max_lag = 0;
    std::vector<TcmEdge> edges;
    std::vector<double> noise_scales;  // one per variable
};

struct TcmSpec {
    int n_vars = 4;
    int length = 256;
    double edge_prob = 0.3;
    int max_lag = 5;
    std::optional<CausalGraph> graph;  // sampled when unset
};

struct TcmResult {
    Matrix series;  // length x n_vars
    CausalGraph graph;
};

// Each ordered variable pair (self-loops included) gets an edge with the
// given probability; lag uniform in 1..max_lag, coefficient uniform in
// [-0.8, 0.8], noise scales uniform in [0.5, 1.5].
CausalGraph sample_causal_graph(int n_vars, double edge_prob, int max_lag, Rng& rng);

// Largest absolute eigenvalue of the stacked one-step transition matrix.
double companion_spectral_radius(const CausalGraph& graph);

// Scales lag-l coefficients by c^l, which scales every eigenvalue by c, until
// the spectral radius is at or below the target.
CausalGraph rescale_to_stable(CausalGraph graph, double target_radius = 0.95);

Matrix simulate_var(const CausalGraph& graph, int length, int burn_in, Rng& rng);

TcmResult gen_tcm(const TcmSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Autoregressive generator with guaranteed-stationary coefficients.
// ---------------------------------------------------------------------------

struct ArSpec {
    int length = 256;
    int max_order = 4;  // sampled order is uniform in 1..max_order; 0 = white noise
    std::optional<std::vector<double>> coeffs;  // y_t = sum_k coeffs[k] * y_{t-k-1} + eps
    double sigma = 1.0;
};

// Levinson recursion from partial autocorrelations; any sequence inside
// (-1, 1) yields a stationary model.
std::vector<double> ar_from_partials(const std::vector<double>& partials);

std::vector<double> gen_ar(const ArSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Exponential smoothing generator (additive errors, optional trend/season).
// ---------------------------------------------------------------------------

struct EtsSpec {
    int length = 256;
    std::optional<double> alpha;  // level smoothing in (0, 1]
    std::optional<double> beta;   // trend smoothing, 0 disables the component
    std::optional<double> gamma;  // seasonal smoothing, 0 disables the component
    int period = 12;
    double sigma = 1.0;
};

struct EtsResult {
    std::vector<double> series;
    std::vector<double> innovations;
};

EtsResult gen_ets(const EtsSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Gaussian-process sampler over a random kernel composition.
// ---------------------------------------------------------------------------

using Kernel = std::function<double(double, double)>;

Kernel linear_kernel(double variance, double offset);
Kernel periodic_kernel(double length_scale, double period);
Kernel se_kernel(double length_scale);

// Starts from one random bank member and combines in up to max_terms - 1 more
// with + or *, each chosen by coin flip.
Kernel sample_kernel(int max_terms, Rng& rng);

// Inputs the sampler evaluates kernels at: t / length for t = 0..length-1.
std::vector<double> gp_input_grid(int length);

// Draws one path via Cholesky of the Gram matrix, adding jitter as needed.
std::vector<double> gp_sample(const Kernel& kernel, int length, Rng& rng);

struct KernelSynthSpec {
    int length = 256;
    int max_terms = 3;
};

std::vector<double> gen_kernelsynth(const KernelSynthSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Multivariatizers: impose dependence on a matrix of independent base series.
// All series matrices are time-major: length x dims.
// ---------------------------------------------------------------------------

enum class MixKind {
    cotemporaneous_linear,
    cotemporaneous_nonlinear,
    sequential_leadlag,
    sequential_cointegration,
};

struct MultivariatizerSpec {
    MixKind kind = MixKind::cotemporaneous_linear;
    int max_lag = 3;           // lead-lag depth
    double noise_scale = 0.1;  // lead-lag innovation scale
    double output_scale = 1.0; // nonlinear tanh output scale
};

// Standard normal entries rescaled to unit spectral norm.
Matrix sample_mixing_matrix(int dim, Rng& rng);

// Linear: y_t = A x_t. Nonlinear: y_t = tanh(A x_t) * scale.
Matrix apply_cotemporaneous(const Matrix& base, const Matrix& mix, bool nonlinear, double scale);

// y_t = sum_l lag_mats[l-1] x_{t-l} + noise, with x treated as zero before
// the window, so the first output row is pure noise.
Matrix apply_leadlag(const Matrix& base, const std::vector<Matrix>& lag_mats, double noise_scale,
                     Rng& rng);

// All outputs share one random walk and differ by independent stationary
// AR(1) parts, so pairwise differences stay bounded while levels wander.
Matrix gen_cointegrated(int length, int dim, Rng& rng);

// Dispatches on spec.kind; the cointegration mode keeps only the shape of
// `base` since its construction replaces the values.
Matrix multivariatize(const Matrix& base, const MultivariatizerSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Task construction.
// ---------------------------------------------------------------------------

// Wraps a (t + horizon) x k series as a task: every variate is a target, the
// last `horizon` rows go to ground truth.
data::ForecastTask task_from_series(const Matrix& series, int horizon, const std::string& task_id,
                                    const std::string& freq);

// Uniformly picks n_known variates as known covariates and n_past_only of the
// rest as past-only covariates; the remainder are targets. Throws when no
// variate is left to forecast.
data::ForecastTask make_covariate_task(const Matrix& series, int horizon, int n_known,
                                       int n_past_only, Rng& rng, const std::string& task_id,
                                       const std::string& freq);

// A task whose target is a noisy weighted sum of near-white driver series
// that are exposed as known covariates. The target's own past carries almost
// no signal, so forecasting it well requires reading the covariates.
struct DriverTaskSpec {
    int n_drivers = 3;
    int history = 96;
    int horizon = 24;
    double noise_scale = 0.05;
    // Share of drivers entering with a negative weight. Training diets bias
    // this below 0.5: an all-symmetric mix leaves the copy circuit with zero
    // mean gradient and the model never starts reading covariates.
    double p_negative = 0.5;
};

data::ForecastTask make_driver_task(const DriverTaskSpec& spec, Rng& rng,
                                    const std::string& task_id);

// One series from a generator drawn uniformly among {tsi, ar, ets,
// kernelsynth}, with that generator's hyperparameters sampled too.
std::vector<double> sample_univariate_series(int length, Rng& rng);

// Either a causal-graph simulation or independently sampled univariate bases
// passed through a random multivariatizer, by coin flip.
Matrix sample_multivariate_series(int length, int dims, Rng& rng);

// ---------------------------------------------------------------------------
// Corpus sampling: one task per index, reproducible from (config, index).
// ---------------------------------------------------------------------------

struct CorpusConfig {
    int n_tasks = 100;
    uint64_t seed = 0;
    int min_history = 64;
    int max_history = 384;
    int min_horizon = 8;
    int max_horizon = 48;
    int min_dims = 2;
    int max_dims = 5;
    // Task-category mix; normalized before use.
    double p_univariate = 0.4;
    double p_multivariate = 0.3;
    double p_covariate = 0.3;
    // Within the covariate category, how often to build a driver task instead
    // of a generic mixed-role one.
    double p_driver = 0.7;
    std::string freq = "H";
};

data::ForecastTask sample_task(const CorpusConfig& config, int index);

std::vector<data::ForecastTask> sample_corpus(const CorpusConfig& config);

}  // namespace groupcast::synth
