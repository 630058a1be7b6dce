#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vocapose/core/tensor.hpp"

namespace vp::core {

// Trainable tensor plus its gradient and Adam moment buffers.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(Tensor::zeros(value.shape)),
          adam_m(Tensor::zeros(value.shape)),
          adam_v(Tensor::zeros(value.shape)) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

using ParamRefs = std::vector<Parameter*>;

// Handle into a Tape.
struct Val {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over whole tensors. Ops append nodes that only reference
// earlier nodes, so reverse creation order is a valid topological order for
// backward(). Not thread-safe: one tape per training thread.
class Tape {
public:
    Val constant(Tensor t);
    Val param(Parameter& p);

    Val add(Val a, Val b);
    Val sub(Val a, Val b);
    Val mul(Val a, Val b);
    Val scale(Val a, double c);
    Val relu(Val a);
    Val gelu(Val a);

    Val matmul(Val a, Val b);     // [m,k]x[k,n]
    Val matmul_nt(Val a, Val b);  // [m,k]x[n,k]^T
    Val transpose(Val a);
    Val slice_cols(Val a, int64_t lo, int64_t hi);
    Val slice_rows(Val a, int64_t lo, int64_t hi);
    Val concat_cols(const std::vector<Val>& parts);
    Val concat_rows(const std::vector<Val>& parts);
    Val add_row_vector(Val a, Val v);  // a [m,n] + v [n] broadcast over rows
    Val tile_cols(Val a, int64_t n);   // [m,1] -> [m,n]

    Val layer_norm(Val x, Val gamma, Val beta, double eps = 1e-5);
    Val softmax_rows(Val x);
    Val causal_softmax_rows(Val x);  // [t,t] scores; entries j > i masked to -inf

    Val gather_rows(Val table, std::vector<int32_t> ids);

    Val sum(Val a);
    Val mean(Val a);
    Val cross_entropy_mean(Val logits, std::vector<int32_t> targets,
                           int64_t loss_from_row = 0);  // mean nats over rows >= loss_from_row
    Val smooth_l1_mean(Val pred, Val target);
    Val mse_mean(Val a, Val b);

    // Forward emits `codes`, backward passes the incoming gradient to z
    // unchanged (straight-through estimator across the quantizer).
    Val straight_through(Val z, Tensor codes);

    Val conv1d(Val x, Val w, Val bias, int64_t stride, int64_t pad);
    Val conv1d_transpose(Val x, Val w, Val bias, int64_t stride);

    const Tensor& value(Val v) const { return node(v).value; }
    const Tensor& grad(Val v) const { return node(v).grad; }

    // Seeds d(loss)/d(loss)=1 and accumulates into every reachable
    // Parameter's grad. Rejects non-scalar losses.
    void backward(Val loss);

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back;  // empty for leaves
    };

    Node& node(Val v) {
        if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
            throw std::invalid_argument("tape: invalid value handle");
        return nodes_[static_cast<size_t>(v.id)];
    }
    const Node& node(Val v) const {
        if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
            throw std::invalid_argument("tape: invalid value handle");
        return nodes_[static_cast<size_t>(v.id)];
    }

    Val push(Tensor value, std::function<void()> back);

    std::vector<Node> nodes_;
};

}  // namespace vp::core
