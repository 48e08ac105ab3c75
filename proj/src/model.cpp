#include "groupcast/model.hpp"

#include <algorithm>
#include <cmath>

namespace groupcast::model {

std::vector<double> default_quantile_levels() {
    std::vector<double> levels;
    levels.push_back(0.01);
    for (int k = 1; k <= 19; ++k) levels.push_back(k / 20.0);
    levels.push_back(0.99);
    return levels;
}

void ModelConfig::validate() const {
    if (patch_len < 1) throw ConfigError("patch_len must be positive");
    if (d_model < 1 || n_heads < 1) throw ConfigError("d_model and n_heads must be positive");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if ((d_model / n_heads) % 2 != 0) throw ConfigError("head dimension must be even");
    if (n_blocks < 0) throw ConfigError("n_blocks must be non-negative");
    if (max_context < patch_len) throw ConfigError("max_context must cover one patch");
    if (max_output_patches < 1) throw ConfigError("max_output_patches must be positive");
    if (quantile_levels.empty()) throw ConfigError("quantile_levels must be non-empty");
    for (size_t i = 0; i < quantile_levels.size(); ++i) {
        const double q = quantile_levels[i];
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile levels must lie in (0,1)");
        if (i > 0 && q <= quantile_levels[i - 1])
            throw ConfigError("quantile levels must be strictly increasing");
    }
}

void Parameters::add(const std::string& name, nn::Tensor tensor) {
    names.push_back(name);
    by_name.emplace(name, std::move(tensor));
}

nn::Tensor& Parameters::at(const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error("unknown parameter: " + name);
    return it->second;
}

const nn::Tensor& Parameters::at(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error("unknown parameter: " + name);
    return it->second;
}

int64_t Parameters::scalar_count() const {
    int64_t total = 0;
    for (const auto& name : names) total += at(name).size();
    return total;
}

void Parameters::zero_grad() {
    for (const auto& name : names) at(name).zero_grad();
}

namespace {

nn::Tensor random_weight(const nn::Shape& shape, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(shape[0]));
    std::vector<double> vals(static_cast<size_t>(nn::numel(shape)));
    for (auto& v : vals) v = rng.normal(0.0, scale);
    return nn::Tensor::from(shape, std::move(vals), true);
}

nn::Tensor ones(int n) {
    return nn::Tensor::from({n}, std::vector<double>(static_cast<size_t>(n), 1.0), true);
}

void add_residual_net(Parameters& params, const std::string& prefix, int in_dim, int hidden,
                      int out_dim, Rng& rng) {
    params.add(prefix + "w1", random_weight({in_dim, hidden}, rng));
    params.add(prefix + "b1", nn::Tensor::zeros({hidden}, true));
    params.add(prefix + "w2", random_weight({hidden, out_dim}, rng));
    params.add(prefix + "b2", nn::Tensor::zeros({out_dim}, true));
    params.add(prefix + "skip", random_weight({in_dim, out_dim}, rng));
}

nn::Tensor residual_net(const nn::Tensor& x, const Parameters& params, const std::string& prefix) {
    auto h = nn::gelu(nn::add_rowvec(nn::linear(x, params.at(prefix + "w1")),
                                     params.at(prefix + "b1")));
    auto y = nn::add_rowvec(nn::linear(h, params.at(prefix + "w2")), params.at(prefix + "b2"));
    return nn::add(y, nn::linear(x, params.at(prefix + "skip")));
}

}  // namespace

Parameters init_parameters(const ModelConfig& config, uint64_t seed) {
    config.validate();
    Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
    Parameters params;
    const int d = config.d_model;
    const int p = config.patch_len;

    add_residual_net(params, "in.", 3 * p, d, d, rng);
    {
        std::vector<double> reg(static_cast<size_t>(d));
        for (auto& v : reg) v = rng.normal(0.0, 1.0);
        params.add("reg", nn::Tensor::from({d}, std::move(reg), true));
    }
    for (int b = 0; b < config.n_blocks; ++b) {
        const std::string blk = "block" + std::to_string(b) + ".";
        for (const std::string& sub : {std::string("time."), std::string("group.")}) {
            params.add(blk + sub + "gain", ones(d));
            params.add(blk + sub + "wq", random_weight({d, d}, rng));
            params.add(blk + sub + "wk", random_weight({d, d}, rng));
            params.add(blk + sub + "wv", random_weight({d, d}, rng));
            params.add(blk + sub + "wo", random_weight({d, d}, rng));
        }
        params.add(blk + "ffn.gain", ones(d));
        params.add(blk + "ffn.w_gate", random_weight({d, config.d_ff()}, rng));
        params.add(blk + "ffn.w_up", random_weight({d, config.d_ff()}, rng));
        params.add(blk + "ffn.w_down", random_weight({config.d_ff(), d}, rng));
    }
    if (config.n_blocks > 0) params.add("final.gain", ones(d));
    add_residual_net(params, "head.", d, d, p * config.n_quantiles(), rng);
    return params;
}

ForwardResult forward(const data::GroupedBatch& batch, const Parameters& params,
                      const ModelConfig& config) {
    const int b_rows = static_cast<int>(batch.rows.size());
    if (b_rows == 0) throw Error("empty batch");
    if (batch.t > config.max_context) throw Error("context exceeds model maximum");
    if (batch.t < 1 || batch.h < 1) throw Error("batch must have context and horizon");

    const int p = config.patch_len;
    const int t = batch.t;
    const int h = batch.h;
    const int n_ctx = (t + p - 1) / p;
    const int n_fut = (h + p - 1) / p;
    if (n_fut > config.max_output_patches)
        throw Error("horizon needs " + std::to_string(n_fut) + " output patches, limit is " +
                    std::to_string(config.max_output_patches));
    const int l_in = n_ctx + n_fut;
    const int l_total = n_ctx + 1 + n_fut;
    const int ctx_pad = n_ctx * p - t;

    ForwardResult result;
    result.n_ctx = n_ctx;
    result.n_fut = n_fut;
    result.row_norms.resize(static_cast<size_t>(b_rows));

    std::vector<double> tok_input(static_cast<size_t>(b_rows) * l_in * 3 * p);
    std::vector<uint8_t> valid(static_cast<size_t>(b_rows) * l_total, 0);
    const std::vector<double> time_base = tokenizer::build_time_index(t, h, config.max_context);

    for (int b = 0; b < b_rows; ++b) {
        const auto& row = batch.rows[static_cast<size_t>(b)];
        if (static_cast<int>(row.values.size()) != t + h)
            throw Error("batch row length does not match batch T+H");

        Matrix history(t, 1);
        for (int i = 0; i < t; ++i) history.at(i, 0) = row.values[static_cast<size_t>(i)];
        auto norm = tokenizer::fit_normalizer(history);
        result.row_norms[static_cast<size_t>(b)] = norm;

        std::vector<double> normalized(static_cast<size_t>(t + h));
        for (int i = 0; i < t + h; ++i)
            normalized[static_cast<size_t>(i)] =
                tokenizer::normalize(row.values[static_cast<size_t>(i)], norm.mu[0], norm.sigma[0]);

        // The time index is zeroed at structural padding (slots outside the
        // row's own history or horizon), so a row tokenizes identically
        // whether it is alone or aligned into a longer batch.
        std::vector<double> time(time_base);
        for (int i = 0; i < t - row.orig_t; ++i) time[static_cast<size_t>(i)] = 0.0;
        for (int i = t + row.orig_h; i < t + h; ++i) time[static_cast<size_t>(i)] = 0.0;

        auto masked = tokenizer::build_mask_and_impute(normalized, t, true);
        auto seq = tokenizer::patchify(masked, time, t, h, p);

        for (int pi = 0; pi < l_in; ++pi) {
            const auto& patch = pi < n_ctx ? seq.context[static_cast<size_t>(pi)]
                                           : seq.future[static_cast<size_t>(pi - n_ctx)];
            double* dst = tok_input.data() + (static_cast<size_t>(b) * l_in + pi) * 3 * p;
            std::copy_n(patch.values.data(), p, dst);
            std::copy_n(patch.time.data(), p, dst + p);
            std::copy_n(patch.mask.data(), p, dst + 2 * p);
        }

        // A context patch is valid when it overlaps the row's real history;
        // a future patch when it overlaps the row's own horizon.
        uint8_t* vrow = valid.data() + static_cast<size_t>(b) * l_total;
        for (int pi = 0; pi < n_ctx; ++pi)
            vrow[pi] = (pi + 1) * p - ctx_pad > t - row.orig_t ? 1 : 0;
        vrow[n_ctx] = 1;
        for (int pi = 0; pi < n_fut; ++pi) vrow[n_ctx + 1 + pi] = pi * p < row.orig_h ? 1 : 0;
    }

    std::vector<int> group_ids(static_cast<size_t>(b_rows));
    for (int b = 0; b < b_rows; ++b) group_ids[static_cast<size_t>(b)] = batch.rows[static_cast<size_t>(b)].group_id;

    std::vector<int> positions(static_cast<size_t>(l_total));
    for (int i = 0; i < l_total; ++i) positions[static_cast<size_t>(i)] = i - n_ctx;

    auto x = nn::Tensor::from({b_rows, l_in, 3 * p}, std::move(tok_input), false);
    auto embedded = residual_net(x, params, "in.");
    auto ctx = nn::slice_tokens(embedded, 0, n_ctx);
    auto fut = nn::slice_tokens(embedded, n_ctx, n_fut);
    auto reg = nn::broadcast_rows(params.at("reg"), b_rows);
    auto tokens = nn::concat_tokens({ctx, reg, fut});

    for (int blk = 0; blk < config.n_blocks; ++blk) {
        const std::string prefix = "block" + std::to_string(blk) + ".";
        {
            auto n = nn::rms_norm(tokens, params.at(prefix + "time.gain"));
            auto q = nn::linear(n, params.at(prefix + "time.wq"));
            auto k = nn::linear(n, params.at(prefix + "time.wk"));
            auto v = nn::linear(n, params.at(prefix + "time.wv"));
            auto a = nn::time_attention(q, k, v, config.n_heads, positions, config.rope_base, valid);
            tokens = nn::add(tokens, nn::linear(a, params.at(prefix + "time.wo")));
        }
        {
            auto n = nn::rms_norm(tokens, params.at(prefix + "group.gain"));
            auto q = nn::linear(n, params.at(prefix + "group.wq"));
            auto k = nn::linear(n, params.at(prefix + "group.wk"));
            auto v = nn::linear(n, params.at(prefix + "group.wv"));
            auto a = nn::group_attention(q, k, v, config.n_heads, group_ids, valid);
            tokens = nn::add(tokens, nn::linear(a, params.at(prefix + "group.wo")));
        }
        {
            auto n = nn::rms_norm(tokens, params.at(prefix + "ffn.gain"));
            auto gated = nn::mul(nn::gelu(nn::linear(n, params.at(prefix + "ffn.w_gate"))),
                                 nn::linear(n, params.at(prefix + "ffn.w_up")));
            tokens = nn::add(tokens, nn::linear(gated, params.at(prefix + "ffn.w_down")));
        }
    }
    if (config.n_blocks > 0) tokens = nn::rms_norm(tokens, params.at("final.gain"));

    auto fut_emb = nn::slice_tokens(tokens, n_ctx + 1, n_fut);
    auto head_out = residual_net(fut_emb, params, "head.");
    result.predictions = nn::reshape(head_out, {b_rows, n_fut * p, config.n_quantiles()});
    return result;
}

}  // namespace groupcast::model
