#include "groupcast/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>
#include <utility>

namespace groupcast::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

bool any_requires_grad(const std::vector<Tensor>& parents) {
    for (const auto& p : parents)
        if (p.node()->requires_grad) return true;
    return false;
}

int last_dim(const Shape& s) { return s.back(); }

int64_t lead_size(const Shape& s) {
    int64_t n = 1;
    for (size_t i = 0; i + 1 < s.size(); ++i) n *= s[i];
    return n;
}

}  // namespace

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value.assign(static_cast<size_t>(numel(shape)), 0.0);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
    if (static_cast<int64_t>(values.size()) != numel(shape))
        throw Error("tensor value count does not match shape");
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

double Tensor::item() const {
    if (node_->value.size() != 1) throw Error("item() requires a scalar tensor");
    return node_->value[0];
}

void Tensor::backward() const {
    if (node_->value.size() != 1) throw Error("backward() requires a scalar loss");

    // Topological order via iterative DFS over parents.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx].get();
            ++idx;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->ensure_grad();
    node_->grad[0] += 1.0;
    // Post-order emits ancestors before the root, so run backprop in reverse.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->requires_grad = any_requires_grad(parents);
    if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node());
        node->backprop = std::move(backward_fn);
    }
    return Tensor(node);
}

Tensor linear(const Tensor& x, const Tensor& w) {
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (ws.size() != 2 || last_dim(xs) != ws[0])
        throw Error("linear: inner dimensions do not match");
    const int64_t rows = lead_size(xs);
    const int k = ws[0];
    const int m = ws[1];

    Shape out_shape(xs.begin(), xs.end() - 1);
    out_shape.push_back(m);
    std::vector<double> out(static_cast<size_t>(rows) * m);
    {
        CMapRM X(x.values().data(), rows, k);
        CMapRM W(w.values().data(), k, m);
        MapRM Y(out.data(), rows, m);
        Y.noalias() = X * W;
    }

    auto xn = x.node();
    auto wn = w.node();
    return make_op(std::move(out_shape), std::move(out), {x, w}, [xn, wn, rows, k, m](Node& node) {
        CMapRM dY(node.grad.data(), rows, m);
        if (xn->requires_grad) {
            xn->ensure_grad();
            MapRM dX(xn->grad.data(), rows, k);
            CMapRM W(wn->value.data(), k, m);
            dX.noalias() += dY * W.transpose();
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            MapRM dW(wn->grad.data(), k, m);
            CMapRM X(xn->value.data(), rows, k);
            dW.noalias() += X.transpose() * dY;
        }
    });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    const int d = last_dim(x.shape());
    if (b.shape().size() != 1 || b.dim(0) != d)
        throw Error("add_rowvec: bias length does not match last dim");
    const int64_t rows = lead_size(x.shape());
    std::vector<double> out(x.values());
    for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] += b.values()[static_cast<size_t>(j)];

    auto xn = x.node();
    auto bn = b.node();
    return make_op(x.shape(), std::move(out), {x, b}, [xn, bn, rows, d](Node& node) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i) xn->grad[i] += node.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < d; ++j) bn->grad[static_cast<size_t>(j)] += node.grad[static_cast<size_t>(r) * d + j];
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw Error("add: shape mismatch");
    std::vector<double> out(a.values());
    for (size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& node) {
        for (Node* p : {an.get(), bn.get()}) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i) p->grad[i] += node.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw Error("mul: shape mismatch");
    std::vector<double> out(a.values());
    for (size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& node) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i) bn->grad[i] += node.grad[i] * an->value[i];
        }
    });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = x.values()[i];
        out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    auto xn = x.node();
    return make_op(x.shape(), std::move(out), {x}, [xn](Node& node) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i) {
            const double v = xn->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            xn->grad[i] += node.grad[i] * (cdf + v * pdf);
        }
    });
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps) {
    const int d = last_dim(x.shape());
    if (gain.shape().size() != 1 || gain.dim(0) != d)
        throw Error("rms_norm: gain length does not match last dim");
    const int64_t rows = lead_size(x.shape());
    std::vector<double> out(x.values().size());
    std::vector<double> inv_rms(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.values().data() + r * d;
        double ss = 0.0;
        for (int j = 0; j < d; ++j) ss += xr[j] * xr[j];
        const double inv = 1.0 / std::sqrt(ss / d + eps);
        inv_rms[static_cast<size_t>(r)] = inv;
        double* yr = out.data() + r * d;
        for (int j = 0; j < d; ++j) yr[j] = gain.values()[static_cast<size_t>(j)] * xr[j] * inv;
    }
    auto xn = x.node();
    auto gn = gain.node();
    return make_op(x.shape(), std::move(out), {x, gain},
                   [xn, gn, rows, d, inv_rms = std::move(inv_rms)](Node& node) {
        for (int64_t r = 0; r < rows; ++r) {
            const double* xr = xn->value.data() + r * d;
            const double* dyr = node.grad.data() + r * d;
            const double inv = inv_rms[static_cast<size_t>(r)];
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (int j = 0; j < d; ++j) gn->grad[static_cast<size_t>(j)] += dyr[j] * xr[j] * inv;
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                // y_j = g_j x_j s with s = (mean(x^2)+eps)^{-1/2};
                // dx_j = s (g_j dy_j - x_j s^2 / d * sum_i g_i dy_i x_i).
                double dot = 0.0;
                for (int j = 0; j < d; ++j) dot += gn->value[static_cast<size_t>(j)] * dyr[j] * xr[j];
                double* dxr = xn->grad.data() + r * d;
                const double coef = dot * inv * inv * inv / d;
                for (int j = 0; j < d; ++j)
                    dxr[j] += gn->value[static_cast<size_t>(j)] * dyr[j] * inv - xr[j] * coef;
            }
        }
    });
}

namespace {

// Rotary rotation of one head vector in place. Pairs (2i, 2i+1) rotate by
// pos * base^(-2i/dh); sign=-1 applies the inverse rotation.
void apply_rope(double* h, int dh, int pos, double base, int sign) {
    for (int i = 0; i + 1 < dh; i += 2) {
        const double freq = std::pow(base, -static_cast<double>(i) / dh);
        const double angle = sign * pos * freq;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double a = h[i];
        const double b = h[i + 1];
        h[i] = a * c - b * s;
        h[i + 1] = a * s + b * c;
    }
}

// Shared softmax-attention core over gathered vectors.
// q,k,v are n x dh row-major; writes out (n x dh) and the weights (n x n).
void attention_forward(const double* q, const double* k, const double* v, int n, int dh,
                       double* out, double* weights) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int i = 0; i < n; ++i) {
        double* wrow = weights + static_cast<size_t>(i) * n;
        double maxs = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            const double* qi = q + static_cast<size_t>(i) * dh;
            const double* kj = k + static_cast<size_t>(j) * dh;
            for (int t = 0; t < dh; ++t) s += qi[t] * kj[t];
            s *= scale;
            wrow[j] = s;
            maxs = std::max(maxs, s);
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            wrow[j] = std::exp(wrow[j] - maxs);
            denom += wrow[j];
        }
        double* orow = out + static_cast<size_t>(i) * dh;
        std::fill(orow, orow + dh, 0.0);
        for (int j = 0; j < n; ++j) {
            wrow[j] /= denom;
            const double* vj = v + static_cast<size_t>(j) * dh;
            for (int t = 0; t < dh; ++t) orow[t] += wrow[j] * vj[t];
        }
    }
}

// Reverse of attention_forward. dq/dk/dv accumulate.
void attention_backward(const double* q, const double* k, const double* v, int n, int dh,
                        const double* weights, const double* dout,
                        double* dq, double* dk, double* dv) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> ds(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* wrow = weights + static_cast<size_t>(i) * n;
        const double* doi = dout + static_cast<size_t>(i) * dh;
        // da_j = dout_i . v_j ; ds = a * (da - sum_j a_j da_j)
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
            double da = 0.0;
            const double* vj = v + static_cast<size_t>(j) * dh;
            for (int t = 0; t < dh; ++t) da += doi[t] * vj[t];
            ds[static_cast<size_t>(j)] = da;
            dot += wrow[j] * da;
        }
        for (int j = 0; j < n; ++j) {
            const double dsj = wrow[j] * (ds[static_cast<size_t>(j)] - dot) * scale;
            const double* qi = q + static_cast<size_t>(i) * dh;
            const double* kj = k + static_cast<size_t>(j) * dh;
            double* dqi = dq + static_cast<size_t>(i) * dh;
            double* dkj = dk + static_cast<size_t>(j) * dh;
            double* dvj = dv + static_cast<size_t>(j) * dh;
            for (int t = 0; t < dh; ++t) {
                dqi[t] += dsj * kj[t];
                dkj[t] += dsj * qi[t];
                dvj[t] += wrow[j] * doi[t];
            }
        }
    }
}

struct AttnCheck {
    int batch;
    int len;
    int dim;
    int dh;
};

AttnCheck check_qkv(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads) {
    if (q.shape().size() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
        throw Error("attention: q/k/v must share a (B, L, D) shape");
    const int d = q.dim(2);
    if (n_heads <= 0 || d % n_heads != 0) throw Error("attention: D not divisible by heads");
    const int dh = d / n_heads;
    if (dh % 2 != 0) throw Error("attention: head dim must be even for rotary pairs");
    return {q.dim(0), q.dim(1), d, dh};
}

}  // namespace

Tensor time_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads,
                      const std::vector<int>& positions, double rope_base,
                      const std::vector<uint8_t>& valid) {
    const auto [batch, len, dim, dh] = check_qkv(q, k, v, n_heads);
    if (static_cast<int>(positions.size()) != len)
        throw Error("time_attention: positions length must equal L");
    if (!valid.empty() && static_cast<int>(valid.size()) != batch * len)
        throw Error("time_attention: validity mask must be B*L");

    std::vector<double> out(q.values().size(), 0.0);
    // Per (row, head): gathered rotated q/k, token ids, and attention weights.
    struct Saved {
        std::vector<int> tokens;
        std::vector<double> qr, kr, w;
    };
    auto saved = std::make_shared<std::vector<Saved>>(static_cast<size_t>(batch) * n_heads);

    for (int b = 0; b < batch; ++b) {
        std::vector<int> tokens;
        tokens.reserve(static_cast<size_t>(len));
        for (int l = 0; l < len; ++l)
            if (valid.empty() || valid[static_cast<size_t>(b) * len + l]) tokens.push_back(l);
        const int n = static_cast<int>(tokens.size());
        if (n == 0) continue;
        for (int h = 0; h < n_heads; ++h) {
            Saved& sv = (*saved)[static_cast<size_t>(b) * n_heads + h];
            sv.tokens = tokens;
            sv.qr.resize(static_cast<size_t>(n) * dh);
            sv.kr.resize(static_cast<size_t>(n) * dh);
            std::vector<double> vg(static_cast<size_t>(n) * dh);
            for (int i = 0; i < n; ++i) {
                const int l = tokens[static_cast<size_t>(i)];
                const size_t src = (static_cast<size_t>(b) * len + l) * dim + static_cast<size_t>(h) * dh;
                std::copy_n(q.values().data() + src, dh, sv.qr.data() + static_cast<size_t>(i) * dh);
                std::copy_n(k.values().data() + src, dh, sv.kr.data() + static_cast<size_t>(i) * dh);
                std::copy_n(v.values().data() + src, dh, vg.data() + static_cast<size_t>(i) * dh);
                apply_rope(sv.qr.data() + static_cast<size_t>(i) * dh, dh, positions[static_cast<size_t>(l)], rope_base, +1);
                apply_rope(sv.kr.data() + static_cast<size_t>(i) * dh, dh, positions[static_cast<size_t>(l)], rope_base, +1);
            }
            sv.w.resize(static_cast<size_t>(n) * n);
            std::vector<double> og(static_cast<size_t>(n) * dh);
            attention_forward(sv.qr.data(), sv.kr.data(), vg.data(), n, dh, og.data(), sv.w.data());
            for (int i = 0; i < n; ++i) {
                const int l = tokens[static_cast<size_t>(i)];
                const size_t dst = (static_cast<size_t>(b) * len + l) * dim + static_cast<size_t>(h) * dh;
                std::copy_n(og.data() + static_cast<size_t>(i) * dh, dh, out.data() + dst);
            }
        }
    }

    auto qn = q.node();
    auto kn = k.node();
    auto vn = v.node();
    return make_op(q.shape(), std::move(out), {q, k, v},
                   [qn, kn, vn, saved, batch, len, dim, dh, n_heads, positions, rope_base](Node& node) {
        qn->ensure_grad();
        kn->ensure_grad();
        vn->ensure_grad();
        for (int b = 0; b < batch; ++b) {
            for (int h = 0; h < n_heads; ++h) {
                const Saved& sv = (*saved)[static_cast<size_t>(b) * n_heads + h];
                const int n = static_cast<int>(sv.tokens.size());
                if (n == 0) continue;
                std::vector<double> vg(static_cast<size_t>(n) * dh), dog(static_cast<size_t>(n) * dh);
                for (int i = 0; i < n; ++i) {
                    const int l = sv.tokens[static_cast<size_t>(i)];
                    const size_t src = (static_cast<size_t>(b) * len + l) * dim + static_cast<size_t>(h) * dh;
                    std::copy_n(vn->value.data() + src, dh, vg.data() + static_cast<size_t>(i) * dh);
                    std::copy_n(node.grad.data() + src, dh, dog.data() + static_cast<size_t>(i) * dh);
                }
                std::vector<double> dqr(static_cast<size_t>(n) * dh, 0.0), dkr(dqr), dvg(dqr);
                attention_backward(sv.qr.data(), sv.kr.data(), vg.data(), n, dh, sv.w.data(),
                                   dog.data(), dqr.data(), dkr.data(), dvg.data());
                for (int i = 0; i < n; ++i) {
                    const int l = sv.tokens[static_cast<size_t>(i)];
                    // Rotation is orthogonal, so the input grad is the reverse rotation.
                    apply_rope(dqr.data() + static_cast<size_t>(i) * dh, dh, positions[static_cast<size_t>(l)], rope_base, -1);
                    apply_rope(dkr.data() + static_cast<size_t>(i) * dh, dh, positions[static_cast<size_t>(l)], rope_base, -1);
                    const size_t dst = (static_cast<size_t>(b) * len + l) * dim + static_cast<size_t>(h) * dh;
                    for (int t = 0; t < dh; ++t) {
                        qn->grad[dst + t] += dqr[static_cast<size_t>(i) * dh + t];
                        kn->grad[dst + t] += dkr[static_cast<size_t>(i) * dh + t];
                        vn->grad[dst + t] += dvg[static_cast<size_t>(i) * dh + t];
                    }
                }
            }
        }
    });
}

Tensor group_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads,
                       const std::vector<int>& group_ids,
                       const std::vector<uint8_t>& valid) {
    const auto [batch, len, dim, dh] = check_qkv(q, k, v, n_heads);
    if (static_cast<int>(group_ids.size()) != batch)
        throw Error("group_attention: group id count must equal B");
    if (!valid.empty() && static_cast<int>(valid.size()) != batch * len)
        throw Error("group_attention: validity mask must be B*L");

    // Member rows per group, in batch order.
    std::vector<std::vector<int>> groups;
    {
        std::vector<std::pair<int, int>> seen;  // (gid, group index)
        for (int b = 0; b < batch; ++b) {
            int gi = -1;
            for (auto& [gid, idx] : seen)
                if (gid == group_ids[static_cast<size_t>(b)]) { gi = idx; break; }
            if (gi < 0) {
                gi = static_cast<int>(groups.size());
                seen.emplace_back(group_ids[static_cast<size_t>(b)], gi);
                groups.emplace_back();
            }
            groups[static_cast<size_t>(gi)].push_back(b);
        }
    }

    std::vector<double> out(q.values().size(), 0.0);
    struct Saved {
        std::vector<int> rows;  // participating rows at this (position, group)
        std::vector<double> w;
    };
    auto saved = std::make_shared<std::vector<std::vector<Saved>>>();
    saved->resize(static_cast<size_t>(len) * groups.size());
    for (auto& s : *saved) s.resize(static_cast<size_t>(n_heads));

    std::vector<double> qg, kg, vg, og;
    for (int l = 0; l < len; ++l) {
        for (size_t g = 0; g < groups.size(); ++g) {
            std::vector<int> rows;
            for (int b : groups[g])
                if (valid.empty() || valid[static_cast<size_t>(b) * len + l]) rows.push_back(b);
            const int n = static_cast<int>(rows.size());
            if (n == 0) continue;
            for (int h = 0; h < n_heads; ++h) {
                qg.resize(static_cast<size_t>(n) * dh);
                kg.resize(static_cast<size_t>(n) * dh);
                vg.resize(static_cast<size_t>(n) * dh);
                og.resize(static_cast<size_t>(n) * dh);
                for (int i = 0; i < n; ++i) {
                    const size_t src = (static_cast<size_t>(rows[static_cast<size_t>(i)]) * len + l) * dim + static_cast<size_t>(h) * dh;
                    std::copy_n(q.values().data() + src, dh, qg.data() + static_cast<size_t>(i) * dh);
                    std::copy_n(k.values().data() + src, dh, kg.data() + static_cast<size_t>(i) * dh);
                    std::copy_n(v.values().data() + src, dh, vg.data() + static_cast<size_t>(i) * dh);
                }
                Saved& sv = (*saved)[static_cast<size_t>(l) * groups.size() + g][static_cast<size_t>(h)];
                sv.rows = rows;
                sv.w.resize(static_cast<size_t>(n) * n);
                attention_forward(qg.data(), kg.data(), vg.data(), n, dh, og.data(), sv.w.data());
                for (int i = 0; i < n; ++i) {
                    const size_t dst = (static_cast<size_t>(rows[static_cast<size_t>(i)]) * len + l) * dim + static_cast<size_t>(h) * dh;
                    std::copy_n(og.data() + static_cast<size_t>(i) * dh, dh, out.data() + dst);
                }
            }
        }
    }

    auto qn = q.node();
    auto kn = k.node();
    auto vn = v.node();
    const size_t n_groups = groups.size();
    return make_op(q.shape(), std::move(out), {q, k, v},
                   [qn, kn, vn, saved, len, dim, dh, n_heads, n_groups](Node& node) {
        qn->ensure_grad();
        kn->ensure_grad();
        vn->ensure_grad();
        std::vector<double> qg, kg, vg, dog, dqg, dkg, dvg;
        for (int l = 0; l < len; ++l) {
            for (size_t g = 0; g < n_groups; ++g) {
                for (int h = 0; h < n_heads; ++h) {
                    const Saved& sv = (*saved)[static_cast<size_t>(l) * n_groups + g][static_cast<size_t>(h)];
                    const int n = static_cast<int>(sv.rows.size());
                    if (n == 0) continue;
                    const size_t nd = static_cast<size_t>(n) * dh;
                    qg.resize(nd); kg.resize(nd); vg.resize(nd); dog.resize(nd);
                    dqg.assign(nd, 0.0); dkg.assign(nd, 0.0); dvg.assign(nd, 0.0);
                    for (int i = 0; i < n; ++i) {
                        const size_t src = (static_cast<size_t>(sv.rows[static_cast<size_t>(i)]) * len + l) * dim + static_cast<size_t>(h) * dh;
                        std::copy_n(qn->value.data() + src, dh, qg.data() + static_cast<size_t>(i) * dh);
                        std::copy_n(kn->value.data() + src, dh, kg.data() + static_cast<size_t>(i) * dh);
                        std::copy_n(vn->value.data() + src, dh, vg.data() + static_cast<size_t>(i) * dh);
                        std::copy_n(node.grad.data() + src, dh, dog.data() + static_cast<size_t>(i) * dh);
                    }
                    attention_backward(qg.data(), kg.data(), vg.data(), n, dh, sv.w.data(),
                                       dog.data(), dqg.data(), dkg.data(), dvg.data());
                    for (int i = 0; i < n; ++i) {
                        const size_t dst = (static_cast<size_t>(sv.rows[static_cast<size_t>(i)]) * len + l) * dim + static_cast<size_t>(h) * dh;
                        for (int t = 0; t < dh; ++t) {
                            qn->grad[dst + t] += dqg[static_cast<size_t>(i) * dh + t];
                            kn->grad[dst + t] += dkg[static_cast<size_t>(i) * dh + t];
                            vn->grad[dst + t] += dvg[static_cast<size_t>(i) * dh + t];
                        }
                    }
                }
            }
        }
    });
}

Tensor slice_tokens(const Tensor& x, int start, int len) {
    if (x.shape().size() != 3) throw Error("slice_tokens: expected (B, L, D)");
    const int batch = x.dim(0);
    const int total = x.dim(1);
    const int d = x.dim(2);
    if (start < 0 || len < 0 || start + len > total) throw Error("slice_tokens: range out of bounds");
    std::vector<double> out(static_cast<size_t>(batch) * len * d);
    for (int b = 0; b < batch; ++b)
        std::copy_n(x.values().data() + (static_cast<size_t>(b) * total + start) * d,
                    static_cast<size_t>(len) * d,
                    out.data() + static_cast<size_t>(b) * len * d);
    auto xn = x.node();
    return make_op({batch, len, d}, std::move(out), {x}, [xn, batch, total, d, start, len](Node& node) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int b = 0; b < batch; ++b) {
            const double* src = node.grad.data() + static_cast<size_t>(b) * len * d;
            double* dst = xn->grad.data() + (static_cast<size_t>(b) * total + start) * d;
            for (int64_t i = 0; i < static_cast<int64_t>(len) * d; ++i) dst[i] += src[i];
        }
    });
}

Tensor concat_tokens(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw Error("concat_tokens: no parts");
    const int batch = parts[0].dim(0);
    const int d = parts[0].dim(2);
    int total = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 3 || p.dim(0) != batch || p.dim(2) != d)
            throw Error("concat_tokens: incompatible part shapes");
        total += p.dim(1);
    }
    std::vector<double> out(static_cast<size_t>(batch) * total * d);
    int offset = 0;
    for (const auto& p : parts) {
        const int l = p.dim(1);
        for (int b = 0; b < batch; ++b)
            std::copy_n(p.values().data() + static_cast<size_t>(b) * l * d, static_cast<size_t>(l) * d,
                        out.data() + (static_cast<size_t>(b) * total + offset) * d);
        offset += l;
    }
    std::vector<NodePtr> nodes;
    std::vector<int> lens;
    for (const auto& p : parts) {
        nodes.push_back(p.node());
        lens.push_back(p.dim(1));
    }
    return make_op({batch, total, d}, std::move(out), parts, [nodes, lens, batch, total, d](Node& node) {
        int off = 0;
        for (size_t pi = 0; pi < nodes.size(); ++pi) {
            const int l = lens[pi];
            if (nodes[pi]->requires_grad) {
                nodes[pi]->ensure_grad();
                for (int b = 0; b < batch; ++b) {
                    const double* src = node.grad.data() + (static_cast<size_t>(b) * total + off) * d;
                    double* dst = nodes[pi]->grad.data() + static_cast<size_t>(b) * l * d;
                    for (int64_t i = 0; i < static_cast<int64_t>(l) * d; ++i) dst[i] += src[i];
                }
            }
            off += l;
        }
    });
}

Tensor broadcast_rows(const Tensor& vec, int batch) {
    if (vec.shape().size() != 1) throw Error("broadcast_rows: expected a vector");
    const int d = vec.dim(0);
    std::vector<double> out(static_cast<size_t>(batch) * d);
    for (int b = 0; b < batch; ++b) std::copy_n(vec.values().data(), d, out.data() + static_cast<size_t>(b) * d);
    auto vn = vec.node();
    return make_op({batch, 1, d}, std::move(out), {vec}, [vn, batch, d](Node& node) {
        if (!vn->requires_grad) return;
        vn->ensure_grad();
        for (int b = 0; b < batch; ++b)
            for (int j = 0; j < d; ++j) vn->grad[static_cast<size_t>(j)] += node.grad[static_cast<size_t>(b) * d + j];
    });
}

Tensor reshape(const Tensor& x, const Shape& shape) {
    if (numel(shape) != x.size()) throw Error("reshape: element count mismatch");
    std::vector<double> out(x.values());
    auto xn = x.node();
    return make_op(shape, std::move(out), {x}, [xn](Node& node) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i) xn->grad[i] += node.grad[i];
    });
}

Tensor sum_all(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    auto xn = x.node();
    return make_op({1}, {total}, {x}, [xn](Node& node) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += node.grad[0];
    });
}

}  // namespace groupcast::nn
