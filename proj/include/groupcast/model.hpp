#pragma once

#include "groupcast/common.hpp"
#include "groupcast/data_model.hpp"
#include "groupcast/nn.hpp"
#include "groupcast/tokenizer.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace groupcast::model {

// The 21 default levels: 0.05 steps from 0.05 to 0.95 plus 0.01 and 0.99.
std::vector<double> default_quantile_levels();

struct ModelConfig {
    int patch_len = 16;
    int d_model = 64;
    int n_blocks = 4;
    int n_heads = 4;
    int max_context = 512;
    int max_output_patches = 8;
    double rope_base = 10000.0;
    std::vector<double> quantile_levels = default_quantile_levels();

    int d_ff() const { return 2 * d_model; }
    int n_quantiles() const { return static_cast<int>(quantile_levels.size()); }
    void validate() const;  // throws ConfigError on violations
};

// Named parameter tensors in a stable creation order (the checkpoint and
// optimizer iterate them by this order).
struct Parameters {
    std::vector<std::string> names;
    std::unordered_map<std::string, nn::Tensor> by_name;

    void add(const std::string& name, nn::Tensor tensor);
    nn::Tensor& at(const std::string& name);
    const nn::Tensor& at(const std::string& name) const;
    int64_t scalar_count() const;
    void zero_grad();
};

Parameters init_parameters(const ModelConfig& config, uint64_t seed);

struct ForwardResult {
    // Normalized-space quantile predictions for every row, shape
    // (B, n_fut*P, |Q|). Rows beyond a row's own horizon and covariate rows
    // carry unused values; callers slice by role and orig_h.
    nn::Tensor predictions;
    std::vector<tokenizer::NormalizationState> row_norms;  // one column per row
    int n_ctx = 0;
    int n_fut = 0;
};

// Tokenizes a grouped batch (normalize, mask, patchify), runs the encoder
// stack (time attention with rotary positions alternating with group
// attention, gated feed-forward, pre-normalization), and maps future-patch
// embeddings through the quantile head.
ForwardResult forward(const data::GroupedBatch& batch, const Parameters& params,
                      const ModelConfig& config);

}  // namespace groupcast::model
