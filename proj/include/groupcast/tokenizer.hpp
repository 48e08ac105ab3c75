#pragma once

#include "groupcast/common.hpp"

#include <vector>

namespace groupcast::tokenizer {

// Per-column scaling statistics fitted on observed history only.
struct NormalizationState {
    std::vector<double> mu;
    std::vector<double> sigma;  // strictly positive after fallback
};

// Per-column mean and population standard deviation over the observed entries
// of `history` (T rows, one column per series dimension). Columns with no
// observations fall back to mu=0, sigma=1; constant columns to sigma=1.
NormalizationState fit_normalizer(const Matrix& history);

// asinh((v - mu) / sigma). Missing values pass through unchanged.
double normalize(double v, double mu, double sigma);

// mu + sigma * sinh(z), the inverse of normalize.
double denormalize_quantile(double z, double mu, double sigma);

// Relative time index [-T/C, ..., -1/C, 0, 1/C, ..., (H-1)/C] of length T+H:
// 0 marks the first forecast step. Throws when T exceeds the model maximum C.
std::vector<double> build_time_index(int t, int h, int c);

struct MaskedColumn {
    std::vector<double> values;  // missing entries replaced by 0
    std::vector<double> mask;    // 1 where observed, else 0
};

// Builds the observation mask for a column spanning T+H rows and zeroes out
// whatever is unobserved. Rows at or beyond T count as observed only when
// `future_observed` is set (known covariates).
MaskedColumn build_mask_and_impute(const std::vector<double>& column, int t, bool future_observed);

struct Patch {
    std::vector<double> values;
    std::vector<double> time;
    std::vector<double> mask;
};

struct PatchedSequence {
    std::vector<Patch> context;  // ceil(T/P) patches, left-padded
    std::vector<Patch> future;   // ceil(H/P) patches, right-padded
};

// Splits a masked column plus its time index into non-overlapping patches of
// length P. Context is padded on the left, future on the right; padded slots
// carry value 0, time 0, mask 0.
PatchedSequence patchify(const MaskedColumn& column, const std::vector<double>& time_index,
                         int t, int h, int p);

}  // namespace groupcast::tokenizer
