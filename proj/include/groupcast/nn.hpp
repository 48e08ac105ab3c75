#pragma once

#include "groupcast/common.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace groupcast::nn {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

using NodePtr = std::shared_ptr<Node>;

// Value-semantic handle over a graph node; copies share the node.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);

    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    double item() const;
    void backward() const;

    const NodePtr& node() const { return node_; }

  private:
    NodePtr node_;
};

// Builds a graph node from precomputed values. The backward closure receives
// the node (holding its upstream grad) and must accumulate into the parents'
// grad buffers. Only wired up when some parent requires grad.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn);

// (..., K) @ (K, M) -> (..., M)
Tensor linear(const Tensor& x, const Tensor& w);
// Adds a length-D vector to every row of a (..., D) tensor.
Tensor add_rowvec(const Tensor& x, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor gelu(const Tensor& x);
// Scale-only norm over the last axis: y = gain * x / sqrt(mean(x^2) + eps).
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps = 1e-6);

// Multi-head attention along the token axis of a (B, L, D) tensor, one
// independent softmax per batch row and head. Queries and keys are rotated by
// `positions` before the dot product (rotary embedding with the given base).
// `valid`, when non-empty, is a B*L row-major mask: invalid tokens neither
// attend nor serve as keys, and their output stays zero.
Tensor time_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads,
                      const std::vector<int>& positions, double rope_base,
                      const std::vector<uint8_t>& valid = {});

// Multi-head attention along the batch axis of a (B, L, D) tensor, one
// independent softmax per token position and head. Row b attends exactly to
// the rows sharing group_ids[b]; no positional rotation is applied, so the
// result is equivariant to reordering rows within a group. `valid` as above.
Tensor group_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads,
                       const std::vector<int>& group_ids,
                       const std::vector<uint8_t>& valid = {});

// (B, L, D) -> (B, len, D), tokens [start, start+len).
Tensor slice_tokens(const Tensor& x, int start, int len);
// Concatenates (B, L_i, D) parts along the token axis.
Tensor concat_tokens(const std::vector<Tensor>& parts);
// (D) -> (B, 1, D), the same vector in every batch row.
Tensor broadcast_rows(const Tensor& vec, int batch);
Tensor reshape(const Tensor& x, const Shape& shape);
Tensor sum_all(const Tensor& x);

}  // namespace groupcast::nn
