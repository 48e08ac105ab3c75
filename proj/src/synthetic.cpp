#include "groupcast/synthetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace groupcast::synth {

namespace {

void check_length(int length) {
    if (length < 8) throw Error("series length must be at least 8");
}

}  // namespace

// ---------------------------------------------------------------------------
// TSI
// ---------------------------------------------------------------------------

TsiResult gen_tsi(const TsiSpec& spec, Rng& rng) {
    check_length(spec.length);
    const int n = spec.length;
    constexpr double pi = std::numbers::pi;

    const TrendKind trend_kind =
        spec.trend ? *spec.trend : static_cast<TrendKind>(rng.uniform_int(0, 2));
    const double trend_scale = spec.trend_scale ? *spec.trend_scale : rng.uniform(-3.0, 3.0);
    const double level = rng.normal();

    std::vector<Sinusoid> sinusoids;
    if (spec.sinusoids) {
        sinusoids = *spec.sinusoids;
    } else {
        const int count = static_cast<int>(rng.uniform_int(1, 3));
        for (int i = 0; i < count; ++i) {
            Sinusoid s;
            s.period = std::exp(rng.uniform(std::log(4.0), std::log(n / 2.0)));
            s.amplitude = rng.uniform(0.2, 2.0);
            s.phase = rng.uniform(0.0, 2.0 * pi);
            sinusoids.push_back(s);
        }
    }

    const NoiseKind noise_kind =
        spec.noise ? *spec.noise : (rng.bernoulli(0.5) ? NoiseKind::gaussian : NoiseKind::ar1);
    const double noise_scale = spec.noise_scale ? *spec.noise_scale : rng.uniform(0.02, 0.5);
    const bool multiplicative = spec.multiplicative ? *spec.multiplicative : rng.bernoulli(0.3);

    TsiResult out;
    out.multiplicative = multiplicative;
    out.trend.resize(n);
    out.seasonal.resize(n);
    out.irregular.resize(n);
    out.series.resize(n);

    for (int t = 0; t < n; ++t) {
        const double u = n > 1 ? static_cast<double>(t) / (n - 1) : 0.0;
        double shape = 0.0;
        switch (trend_kind) {
            case TrendKind::linear: shape = u; break;
            case TrendKind::exponential: shape = std::expm1(3.0 * u) / std::expm1(3.0); break;
            case TrendKind::logistic: shape = 1.0 / (1.0 + std::exp(-10.0 * (u - 0.5))); break;
        }
        out.trend[t] = level + trend_scale * shape;

        double s = 0.0;
        for (const auto& sin_spec : sinusoids)
            s += sin_spec.amplitude * std::sin(2.0 * pi * t / sin_spec.period + sin_spec.phase);
        out.seasonal[t] = s;
    }

    if (noise_kind == NoiseKind::gaussian) {
        for (int t = 0; t < n; ++t) out.irregular[t] = rng.normal(0.0, noise_scale);
    } else {
        const double phi = rng.uniform(0.5, 0.95);
        const double innov = noise_scale * std::sqrt(1.0 - phi * phi);
        double x = rng.normal(0.0, noise_scale);
        for (int t = 0; t < n; ++t) {
            out.irregular[t] = x;
            x = phi * x + rng.normal(0.0, innov);
        }
    }

    if (multiplicative) {
        // Lift the trend above zero so the factors keep a meaningful scale.
        const double lo = *std::min_element(out.trend.begin(), out.trend.end());
        for (double& v : out.trend) v += 1.0 - lo;
        for (int t = 0; t < n; ++t)
            out.series[t] = out.trend[t] * (1.0 + out.seasonal[t]) * (1.0 + out.irregular[t]);
    } else {
        for (int t = 0; t < n; ++t)
            out.series[t] = out.trend[t] + out.seasonal[t] + out.irregular[t];
    }
    return out;
}

// ---------------------------------------------------------------------------
// TCM
// ---------------------------------------------------------------------------

CausalGraph sample_causal_graph(int n_vars, double edge_prob, int max_lag, Rng& rng) {
    if (n_vars < 1) throw Error("graph needs at least one variable");
    if (max_lag < 1) throw Error("maximum lag must be positive");
    CausalGraph graph;
    graph.n_vars = n_vars;
    graph.max_lag = max_lag;
    for (int src = 0; src < n_vars; ++src)
        for (int dst = 0; dst < n_vars; ++dst)
            if (rng.bernoulli(edge_prob)) {
                TcmEdge edge;
                edge.src = src;
                edge.dst = dst;
                edge.lag = static_cast<int>(rng.uniform_int(1, max_lag));
                edge.coeff = rng.uniform(-0.8, 0.8);
                graph.edges.push_back(edge);
            }
    graph.noise_scales.resize(static_cast<size_t>(n_vars));
    for (double& s : graph.noise_scales) s = rng.uniform(0.5, 1.5);
    return graph;
}

double companion_spectral_radius(const CausalGraph& graph) {
    int lag = 0;
    for (const auto& e : graph.edges) lag = std::max(lag, e.lag);
    if (lag == 0) return 0.0;
    const int v = graph.n_vars;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(v * lag, v * lag);
    for (const auto& e : graph.edges) comp(e.dst, (e.lag - 1) * v + e.src) += e.coeff;
    for (int l = 1; l < lag; ++l)
        comp.block(l * v, (l - 1) * v, v, v).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

CausalGraph rescale_to_stable(CausalGraph graph, double target_radius) {
    double radius = companion_spectral_radius(graph);
    for (int attempt = 0; radius > target_radius && attempt < 32; ++attempt) {
        // Exact in real arithmetic; later rounds shave off rounding residue.
        const double c = target_radius / radius * (attempt == 0 ? 1.0 : 0.999);
        for (auto& e : graph.edges) e.coeff *= std::pow(c, e.lag);
        radius = companion_spectral_radius(graph);
    }
    if (radius > target_radius) throw Error("failed to stabilize sampled graph");
    return graph;
}

Matrix simulate_var(const CausalGraph& graph, int length, int burn_in, Rng& rng) {
    const int v = graph.n_vars;
    const int total = length + burn_in;
    Matrix buf(total, v);
    for (int t = 0; t < total; ++t) {
        for (int j = 0; j < v; ++j) buf.at(t, j) = graph.noise_scales[static_cast<size_t>(j)] * rng.normal();
        for (const auto& e : graph.edges)
            if (t - e.lag >= 0) buf.at(t, e.dst) += e.coeff * buf.at(t - e.lag, e.src);
    }
    Matrix out(length, v);
    for (int t = 0; t < length; ++t)
        for (int j = 0; j < v; ++j) out.at(t, j) = buf.at(burn_in + t, j);
    return out;
}

TcmResult gen_tcm(const TcmSpec& spec, Rng& rng) {
    check_length(spec.length);
    TcmResult out;
    out.graph = spec.graph ? *spec.graph
                           : sample_causal_graph(spec.n_vars, spec.edge_prob, spec.max_lag, rng);
    if (out.graph.noise_scales.size() != static_cast<size_t>(out.graph.n_vars))
        throw Error("graph noise scales do not match variable count");
    out.graph = rescale_to_stable(out.graph);
    int lag = 1;
    for (const auto& e : out.graph.edges) lag = std::max(lag, e.lag);
    out.series = simulate_var(out.graph, spec.length, 10 * lag, rng);
    return out;
}

// ---------------------------------------------------------------------------
// AR
// ---------------------------------------------------------------------------

std::vector<double> ar_from_partials(const std::vector<double>& partials) {
    for (double k : partials)
        if (!(std::abs(k) < 1.0)) throw Error("partial autocorrelations must lie inside (-1, 1)");
    std::vector<double> phi;
    for (size_t m = 0; m < partials.size(); ++m) {
        const double k = partials[m];
        std::vector<double> next(m + 1);
        next[m] = k;
        for (size_t j = 0; j < m; ++j) next[j] = phi[j] - k * phi[m - 1 - j];
        phi = std::move(next);
    }
    return phi;
}

std::vector<double> gen_ar(const ArSpec& spec, Rng& rng) {
    check_length(spec.length);
    std::vector<double> coeffs;
    if (spec.coeffs) {
        coeffs = *spec.coeffs;
    } else if (spec.max_order >= 1) {
        const int order = static_cast<int>(rng.uniform_int(1, spec.max_order));
        std::vector<double> partials(static_cast<size_t>(order));
        for (double& k : partials) k = rng.uniform(-0.9, 0.9);
        coeffs = ar_from_partials(partials);
    }
    const int order = static_cast<int>(coeffs.size());
    const int burn_in = 100 + 10 * order;
    std::vector<double> buf(static_cast<size_t>(spec.length + burn_in));
    for (size_t t = 0; t < buf.size(); ++t) {
        double x = rng.normal(0.0, spec.sigma);
        for (int k = 0; k < order; ++k)
            if (static_cast<int>(t) - k - 1 >= 0) x += coeffs[static_cast<size_t>(k)] * buf[t - static_cast<size_t>(k) - 1];
        buf[t] = x;
    }
    return {buf.begin() + burn_in, buf.end()};
}

// ---------------------------------------------------------------------------
// ETS
// ---------------------------------------------------------------------------

EtsResult gen_ets(const EtsSpec& spec, Rng& rng) {
    check_length(spec.length);
    if (spec.period < 1) throw Error("seasonal period must be positive");

    const double alpha = spec.alpha ? *spec.alpha : rng.uniform(0.2, 0.9);
    const double beta =
        spec.beta ? *spec.beta : (rng.bernoulli(0.5) ? rng.uniform(0.05, 0.5) * alpha : 0.0);
    const double gamma = spec.gamma ? *spec.gamma
                                    : ((spec.period > 1 && rng.bernoulli(0.5))
                                           ? rng.uniform(0.1, 0.9) * (1.0 - alpha)
                                           : 0.0);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("level smoothing must lie in (0, 1]");
    if (beta < 0.0 || beta > alpha) throw Error("trend smoothing must lie in [0, alpha]");
    if (gamma < 0.0 || gamma > 1.0 - alpha) throw Error("seasonal smoothing must lie in [0, 1 - alpha]");

    double level = rng.normal();
    double trend = beta > 0.0 ? rng.normal(0.0, 0.1) : 0.0;
    std::vector<double> season(static_cast<size_t>(spec.period), 0.0);
    if (gamma > 0.0) {
        double mean = 0.0;
        for (double& s : season) {
            s = rng.normal();
            mean += s;
        }
        mean /= static_cast<double>(season.size());
        for (double& s : season) s -= mean;
    }

    EtsResult out;
    out.series.resize(static_cast<size_t>(spec.length));
    out.innovations.resize(static_cast<size_t>(spec.length));
    for (int t = 0; t < spec.length; ++t) {
        const double eps = rng.normal(0.0, spec.sigma);
        const size_t slot = static_cast<size_t>(t % spec.period);
        out.series[static_cast<size_t>(t)] = level + trend + season[slot] + eps;
        out.innovations[static_cast<size_t>(t)] = eps;
        level = level + trend + alpha * eps;
        trend += beta * eps;
        season[slot] += gamma * eps;
    }
    return out;
}

// ---------------------------------------------------------------------------
// KernelSynth
// ---------------------------------------------------------------------------

Kernel linear_kernel(double variance, double offset) {
    return [=](double x, double y) { return variance * (x - offset) * (y - offset); };
}

Kernel periodic_kernel(double length_scale, double period) {
    return [=](double x, double y) {
        const double s = std::sin(std::numbers::pi * std::abs(x - y) / period);
        return std::exp(-2.0 * s * s / (length_scale * length_scale));
    };
}

Kernel se_kernel(double length_scale) {
    return [=](double x, double y) {
        const double d = x - y;
        return std::exp(-d * d / (2.0 * length_scale * length_scale));
    };
}

namespace {

Kernel sample_base_kernel(Rng& rng) {
    switch (rng.uniform_int(0, 2)) {
        case 0: return linear_kernel(rng.uniform(0.1, 2.0), rng.uniform(0.0, 1.0));
        case 1:
            return periodic_kernel(rng.uniform(0.5, 2.0),
                                   std::exp(rng.uniform(std::log(0.05), std::log(0.5))));
        default: return se_kernel(std::exp(rng.uniform(std::log(0.02), std::log(0.5))));
    }
}

}  // namespace

Kernel sample_kernel(int max_terms, Rng& rng) {
    if (max_terms < 1) throw Error("kernel composition needs at least one term");
    Kernel kernel = sample_base_kernel(rng);
    const int extra = static_cast<int>(rng.uniform_int(0, max_terms - 1));
    for (int i = 0; i < extra; ++i) {
        Kernel next = sample_base_kernel(rng);
        if (rng.bernoulli(0.5)) {
            kernel = [a = std::move(kernel), b = std::move(next)](double x, double y) {
                return a(x, y) + b(x, y);
            };
        } else {
            kernel = [a = std::move(kernel), b = std::move(next)](double x, double y) {
                return a(x, y) * b(x, y);
            };
        }
    }
    return kernel;
}

std::vector<double> gp_input_grid(int length) {
    std::vector<double> xs(static_cast<size_t>(length));
    for (int i = 0; i < length; ++i) xs[static_cast<size_t>(i)] = static_cast<double>(i) / length;
    return xs;
}

std::vector<double> gp_sample(const Kernel& kernel, int length, Rng& rng) {
    const auto xs = gp_input_grid(length);
    Eigen::MatrixXd gram(length, length);
    for (int i = 0; i < length; ++i)
        for (int j = 0; j <= i; ++j) {
            const double k = kernel(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);
            gram(i, j) = k;
            gram(j, i) = k;
        }

    Eigen::VectorXd z(length);
    for (int i = 0; i < length; ++i) z(i) = rng.normal();

    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd shifted = gram;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd y = llt.matrixL() * z;
            return {y.data(), y.data() + length};
        }
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
    throw Error("kernel matrix is not positive definite");
}

std::vector<double> gen_kernelsynth(const KernelSynthSpec& spec, Rng& rng) {
    check_length(spec.length);
    const Kernel kernel = sample_kernel(spec.max_terms, rng);
    return gp_sample(kernel, spec.length, rng);
}

// ---------------------------------------------------------------------------
// Multivariatizers
// ---------------------------------------------------------------------------

Matrix sample_mixing_matrix(int dim, Rng& rng) {
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
    const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
    if (norm > 0.0) a /= norm;
    Matrix out(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) out.at(i, j) = a(i, j);
    return out;
}

Matrix apply_cotemporaneous(const Matrix& base, const Matrix& mix, bool nonlinear, double scale) {
    if (mix.rows() != base.cols() || mix.cols() != base.cols())
        throw Error("mixing matrix size does not match series width");
    const int t_len = base.rows();
    const int k = base.cols();
    Matrix out(t_len, k);
    for (int t = 0; t < t_len; ++t)
        for (int i = 0; i < k; ++i) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += mix.at(i, j) * base.at(t, j);
            out.at(t, i) = nonlinear ? std::tanh(acc) * scale : acc;
        }
    return out;
}

Matrix apply_leadlag(const Matrix& base, const std::vector<Matrix>& lag_mats, double noise_scale,
                     Rng& rng) {
    const int t_len = base.rows();
    const int k = base.cols();
    for (const auto& b : lag_mats)
        if (b.rows() != k || b.cols() != k) throw Error("lag matrix size does not match series width");
    Matrix out(t_len, k);
    for (int t = 0; t < t_len; ++t)
        for (int i = 0; i < k; ++i) {
            double acc = noise_scale == 0.0 ? 0.0 : noise_scale * rng.normal();
            for (size_t l = 0; l < lag_mats.size(); ++l) {
                const int src_t = t - static_cast<int>(l) - 1;
                if (src_t < 0) continue;
                for (int j = 0; j < k; ++j) acc += lag_mats[l].at(i, j) * base.at(src_t, j);
            }
            out.at(t, i) = acc;
        }
    return out;
}

Matrix gen_cointegrated(int length, int dim, Rng& rng) {
    std::vector<double> walk(static_cast<size_t>(length));
    double w = 0.0;
    for (double& v : walk) {
        w += rng.normal();
        v = w;
    }
    Matrix out(length, dim);
    for (int j = 0; j < dim; ++j) {
        const double phi = rng.uniform(0.3, 0.9);
        const double marginal_sd = rng.uniform(0.3, 1.0);
        const double innov = marginal_sd * std::sqrt(1.0 - phi * phi);
        double x = rng.normal(0.0, marginal_sd);
        for (int t = 0; t < length; ++t) {
            out.at(t, j) = walk[static_cast<size_t>(t)] + x;
            x = phi * x + rng.normal(0.0, innov);
        }
    }
    return out;
}

Matrix multivariatize(const Matrix& base, const MultivariatizerSpec& spec, Rng& rng) {
    if (base.cols() < 2) throw Error("multivariatizer needs at least two series");
    switch (spec.kind) {
        case MixKind::cotemporaneous_linear:
            return apply_cotemporaneous(base, sample_mixing_matrix(base.cols(), rng), false, 1.0);
        case MixKind::cotemporaneous_nonlinear:
            return apply_cotemporaneous(base, sample_mixing_matrix(base.cols(), rng), true,
                                        spec.output_scale);
        case MixKind::sequential_leadlag: {
            if (spec.max_lag < 1) throw Error("lead-lag depth must be positive");
            std::vector<Matrix> lag_mats;
            for (int l = 0; l < spec.max_lag; ++l) {
                Matrix b = sample_mixing_matrix(base.cols(), rng);
                for (int i = 0; i < b.rows(); ++i)
                    for (int j = 0; j < b.cols(); ++j) b.at(i, j) /= spec.max_lag;
                lag_mats.push_back(std::move(b));
            }
            return apply_leadlag(base, lag_mats, spec.noise_scale, rng);
        }
        case MixKind::sequential_cointegration:
            return gen_cointegrated(base.rows(), base.cols(), rng);
    }
    throw Error("unknown multivariatizer kind");
}

// ---------------------------------------------------------------------------
// Task construction
// ---------------------------------------------------------------------------

data::ForecastTask task_from_series(const Matrix& series, int horizon, const std::string& task_id,
                                    const std::string& freq) {
    if (horizon < 1) throw Error("horizon must be positive");
    if (series.rows() <= horizon) throw Error("series not longer than its horizon");
    const int t_len = series.rows() - horizon;
    data::ForecastTask task;
    task.task_id = task_id;
    task.freq = freq;
    task.horizon = horizon;
    task.targets = Matrix(t_len, series.cols());
    task.ground_truth = Matrix(horizon, series.cols());
    for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < series.cols(); ++j) task.targets.at(t, j) = series.at(t, j);
    for (int t = 0; t < horizon; ++t)
        for (int j = 0; j < series.cols(); ++j) task.ground_truth.at(t, j) = series.at(t_len + t, j);
    return task;
}

data::ForecastTask make_covariate_task(const Matrix& series, int horizon, int n_known,
                                       int n_past_only, Rng& rng, const std::string& task_id,
                                       const std::string& freq) {
    if (horizon < 1) throw Error("horizon must be positive");
    if (series.rows() <= horizon) throw Error("series not longer than its horizon");
    if (n_known < 0 || n_past_only < 0) throw Error("covariate counts must be nonnegative");
    const int k = series.cols();
    if (n_known + n_past_only >= k) throw Error("covariate roles leave no target variates");

    std::vector<int> order(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<size_t>(i)] = i;
    for (int i = k - 1; i > 0; --i)
        std::swap(order[static_cast<size_t>(i)],
                  order[static_cast<size_t>(rng.uniform_int(0, i))]);

    std::vector<int> known(order.begin(), order.begin() + n_known);
    std::vector<int> past(order.begin() + n_known, order.begin() + n_known + n_past_only);
    std::vector<int> targets(order.begin() + n_known + n_past_only, order.end());
    std::sort(known.begin(), known.end());
    std::sort(past.begin(), past.end());
    std::sort(targets.begin(), targets.end());

    const int t_len = series.rows() - horizon;
    data::ForecastTask task;
    task.task_id = task_id;
    task.freq = freq;
    task.horizon = horizon;
    task.targets = Matrix(t_len, static_cast<int>(targets.size()));
    task.ground_truth = Matrix(horizon, static_cast<int>(targets.size()));
    for (size_t d = 0; d < targets.size(); ++d) {
        for (int t = 0; t < t_len; ++t) task.targets.at(t, static_cast<int>(d)) = series.at(t, targets[d]);
        for (int t = 0; t < horizon; ++t)
            task.ground_truth.at(t, static_cast<int>(d)) = series.at(t_len + t, targets[d]);
    }
    task.covariates = Matrix(series.rows(), n_known + n_past_only);
    int col = 0;
    for (int idx : known) {
        for (int t = 0; t < series.rows(); ++t) task.covariates.at(t, col) = series.at(t, idx);
        task.covariate_roles.push_back(data::Role::known_covariate);
        ++col;
    }
    for (int idx : past) {
        for (int t = 0; t < series.rows(); ++t) task.covariates.at(t, col) = series.at(t, idx);
        task.covariate_roles.push_back(data::Role::past_only_covariate);
        ++col;
    }
    return task;
}

data::ForecastTask make_driver_task(const DriverTaskSpec& spec, Rng& rng,
                                    const std::string& task_id) {
    if (spec.n_drivers < 1) throw Error("driver task needs at least one driver");
    if (spec.history < 1 || spec.horizon < 1) throw Error("history and horizon must be positive");
    const int total = spec.history + spec.horizon;

    Matrix drivers(total, spec.n_drivers);
    for (int j = 0; j < spec.n_drivers; ++j) {
        const double phi = rng.uniform(-0.3, 0.3);
        const double innov = std::sqrt(1.0 - phi * phi);
        double x = rng.normal();
        for (int t = 0; t < total; ++t) {
            drivers.at(t, j) = x;
            x = phi * x + rng.normal(0.0, innov);
        }
    }

    std::vector<double> weights(static_cast<size_t>(spec.n_drivers));
    for (double& w : weights)
        w = (rng.bernoulli(1.0 - spec.p_negative) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);

    data::ForecastTask task;
    task.task_id = task_id;
    task.freq = "H";
    task.horizon = spec.horizon;
    task.targets = Matrix(spec.history, 1);
    task.ground_truth = Matrix(spec.horizon, 1);
    for (int t = 0; t < total; ++t) {
        double v = spec.noise_scale * rng.normal();
        for (int j = 0; j < spec.n_drivers; ++j) v += weights[static_cast<size_t>(j)] * drivers.at(t, j);
        if (t < spec.history)
            task.targets.at(t, 0) = v;
        else
            task.ground_truth.at(t - spec.history, 0) = v;
    }
    task.covariates = drivers;
    task.covariate_roles.assign(static_cast<size_t>(spec.n_drivers), data::Role::known_covariate);
    return task;
}

// ---------------------------------------------------------------------------
// Corpus sampling
// ---------------------------------------------------------------------------

std::vector<double> sample_univariate_series(int length, Rng& rng) {
    switch (rng.uniform_int(0, 3)) {
        case 0: {
            TsiSpec spec;
            spec.length = length;
            return gen_tsi(spec, rng).series;
        }
        case 1: {
            ArSpec spec;
            spec.length = length;
            return gen_ar(spec, rng);
        }
        case 2: {
            EtsSpec spec;
            spec.length = length;
            static constexpr int kPeriods[] = {4, 7, 12, 24};
            spec.period = kPeriods[rng.uniform_int(0, 3)];
            return gen_ets(spec, rng).series;
        }
        default: {
            KernelSynthSpec spec;
            spec.length = length;
            return gen_kernelsynth(spec, rng);
        }
    }
}

Matrix sample_multivariate_series(int length, int dims, Rng& rng) {
    if (rng.bernoulli(0.5)) {
        TcmSpec spec;
        spec.length = length;
        spec.n_vars = dims;
        return gen_tcm(spec, rng).series;
    }
    Matrix base(length, dims);
    for (int j = 0; j < dims; ++j) {
        const auto series = sample_univariate_series(length, rng);
        for (int t = 0; t < length; ++t) base.at(t, j) = series[static_cast<size_t>(t)];
    }
    MultivariatizerSpec spec;
    spec.kind = static_cast<MixKind>(rng.uniform_int(0, 3));
    return multivariatize(base, spec, rng);
}

data::ForecastTask sample_task(const CorpusConfig& config, int index) {
    Rng rng(Rng::mix(config.seed, static_cast<uint64_t>(index)));
    const int history = static_cast<int>(rng.uniform_int(config.min_history, config.max_history));
    const int horizon = static_cast<int>(rng.uniform_int(config.min_horizon, config.max_horizon));
    const int total = history + horizon;
    const std::string task_id = "task-" + std::to_string(index);

    const int category =
        rng.categorical({config.p_univariate, config.p_multivariate, config.p_covariate});
    if (category == 0) {
        Matrix series(total, 1);
        const auto values = sample_univariate_series(total, rng);
        for (int t = 0; t < total; ++t) series.at(t, 0) = values[static_cast<size_t>(t)];
        return task_from_series(series, horizon, task_id, config.freq);
    }

    const int dims = static_cast<int>(rng.uniform_int(config.min_dims, config.max_dims));
    if (category == 1)
        return task_from_series(sample_multivariate_series(total, dims, rng), horizon, task_id, config.freq);

    if (rng.bernoulli(config.p_driver)) {
        DriverTaskSpec spec;
        spec.n_drivers = std::max(2, dims - 1);
        spec.history = history;
        spec.horizon = horizon;
        return make_driver_task(spec, rng, task_id);
    }
    const Matrix series = sample_multivariate_series(total, dims, rng);
    const int n_known = static_cast<int>(rng.uniform_int(1, dims - 1));
    const int n_past_only = static_cast<int>(rng.uniform_int(0, dims - 1 - n_known));
    return make_covariate_task(series, horizon, n_known, n_past_only, rng, task_id, config.freq);
}

std::vector<data::ForecastTask> sample_corpus(const CorpusConfig& config) {
    std::vector<data::ForecastTask> tasks;
    tasks.reserve(static_cast<size_t>(config.n_tasks));
    for (int i = 0; i < config.n_tasks; ++i) tasks.push_back(sample_task(config, i));
    return tasks;
}

}  // namespace groupcast::synth
