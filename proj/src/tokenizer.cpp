#include "groupcast/tokenizer.hpp"

#include <cmath>

namespace groupcast::tokenizer {

NormalizationState fit_normalizer(const Matrix& history) {
    NormalizationState state;
    state.mu.resize(static_cast<size_t>(history.cols()));
    state.sigma.resize(static_cast<size_t>(history.cols()));
    for (int c = 0; c < history.cols(); ++c) {
        double sum = 0.0;
        int n = 0;
        for (int r = 0; r < history.rows(); ++r) {
            const double v = history.at(r, c);
            if (is_missing(v)) continue;
            sum += v;
            ++n;
        }
        if (n == 0) {
            state.mu[static_cast<size_t>(c)] = 0.0;
            state.sigma[static_cast<size_t>(c)] = 1.0;
            continue;
        }
        const double mu = sum / n;
        double ss = 0.0;
        for (int r = 0; r < history.rows(); ++r) {
            const double v = history.at(r, c);
            if (is_missing(v)) continue;
            ss += (v - mu) * (v - mu);
        }
        const double sigma = std::sqrt(ss / n);
        state.mu[static_cast<size_t>(c)] = mu;
        state.sigma[static_cast<size_t>(c)] = sigma > 0.0 ? sigma : 1.0;
    }
    return state;
}

double normalize(double v, double mu, double sigma) {
    if (is_missing(v)) return v;
    return std::asinh((v - mu) / sigma);
}

double denormalize_quantile(double z, double mu, double sigma) {
    return mu + sigma * std::sinh(z);
}

std::vector<double> build_time_index(int t, int h, int c) {
    if (t > c) throw Error("context exceeds model maximum");
    std::vector<double> index(static_cast<size_t>(t + h));
    for (int i = 0; i < t + h; ++i)
        index[static_cast<size_t>(i)] = static_cast<double>(i - t) / c;
    return index;
}

MaskedColumn build_mask_and_impute(const std::vector<double>& column, int t, bool future_observed) {
    MaskedColumn out;
    out.values.resize(column.size());
    out.mask.resize(column.size());
    for (size_t i = 0; i < column.size(); ++i) {
        const bool in_future = static_cast<int>(i) >= t;
        const bool observed = !is_missing(column[i]) && (!in_future || future_observed);
        out.mask[i] = observed ? 1.0 : 0.0;
        out.values[i] = observed ? column[i] : 0.0;
    }
    return out;
}

PatchedSequence patchify(const MaskedColumn& column, const std::vector<double>& time_index,
                         int t, int h, int p) {
    if (p < 1) throw Error("patch length must be positive");
    if (static_cast<int>(column.values.size()) != t + h ||
        static_cast<int>(time_index.size()) != t + h)
        throw Error("patchify: column and time index must span T+H rows");

    PatchedSequence seq;
    const int n_ctx = (t + p - 1) / p;
    const int n_fut = (h + p - 1) / p;
    const int ctx_pad = n_ctx * p - t;

    seq.context.resize(static_cast<size_t>(n_ctx));
    for (int pi = 0; pi < n_ctx; ++pi) {
        Patch& patch = seq.context[static_cast<size_t>(pi)];
        patch.values.assign(static_cast<size_t>(p), 0.0);
        patch.time.assign(static_cast<size_t>(p), 0.0);
        patch.mask.assign(static_cast<size_t>(p), 0.0);
        for (int s = 0; s < p; ++s) {
            const int row = pi * p + s - ctx_pad;
            if (row < 0) continue;
            patch.values[static_cast<size_t>(s)] = column.values[static_cast<size_t>(row)];
            patch.time[static_cast<size_t>(s)] = time_index[static_cast<size_t>(row)];
            patch.mask[static_cast<size_t>(s)] = column.mask[static_cast<size_t>(row)];
        }
    }

    seq.future.resize(static_cast<size_t>(n_fut));
    for (int pi = 0; pi < n_fut; ++pi) {
        Patch& patch = seq.future[static_cast<size_t>(pi)];
        patch.values.assign(static_cast<size_t>(p), 0.0);
        patch.time.assign(static_cast<size_t>(p), 0.0);
        patch.mask.assign(static_cast<size_t>(p), 0.0);
        for (int s = 0; s < p; ++s) {
            const int row = t + pi * p + s;
            if (row >= t + h) break;
            patch.values[static_cast<size_t>(s)] = column.values[static_cast<size_t>(row)];
            patch.time[static_cast<size_t>(s)] = time_index[static_cast<size_t>(row)];
            patch.mask[static_cast<size_t>(s)] = column.mask[static_cast<size_t>(row)];
        }
    }
    return seq;
}

}  // namespace groupcast::tokenizer
