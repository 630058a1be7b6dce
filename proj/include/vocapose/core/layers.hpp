#pragma once

#include <cmath>
#include <string>

#include "vocapose/core/rng.hpp"
#include "vocapose/core/tape.hpp"

namespace vp::core {

// Weight matrices init uniform in +-1/sqrt(fan_in), biases zero, embeddings
// N(0, 0.02^2); gamma/beta start at identity.

inline Tensor uniform_init(const Shape& shape, int64_t fan_in, Rng& rng) {
    Tensor t(shape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : t.data) x = rng.uniform(-bound, bound);
    return t;
}

// y = x W^T + b with x [n, in], W [out, in], b [out].
struct Dense {
    Parameter w, b;

    Dense(const std::string& name, int64_t in, int64_t out, Rng& rng)
        : w(name + ".w", uniform_init({out, in}, in, rng)), b(name + ".b", Tensor::zeros({out})) {}

    Val forward(Tape& t, Val x) {
        return t.add_row_vector(t.matmul_nt(x, t.param(w)), t.param(b));
    }

    void params(ParamRefs& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct Conv1d {
    Parameter w, b;  // w [cout, cin, k]
    int64_t stride, pad;

    Conv1d(const std::string& name, int64_t cin, int64_t cout, int64_t k, int64_t stride_, int64_t pad_,
           Rng& rng)
        : w(name + ".w", uniform_init({cout, cin, k}, cin * k, rng)),
          b(name + ".b", Tensor::zeros({cout})),
          stride(stride_),
          pad(pad_) {}

    Val forward(Tape& t, Val x) { return t.conv1d(x, t.param(w), t.param(b), stride, pad); }

    void params(ParamRefs& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct ConvTranspose1d {
    Parameter w, b;  // w [cin, cout, k]
    int64_t stride;

    ConvTranspose1d(const std::string& name, int64_t cin, int64_t cout, int64_t k, int64_t stride_,
                    Rng& rng)
        : w(name + ".w", uniform_init({cin, cout, k}, cin * k, rng)),
          b(name + ".b", Tensor::zeros({cout})),
          stride(stride_) {}

    Val forward(Tape& t, Val x) { return t.conv1d_transpose(x, t.param(w), t.param(b), stride); }

    void params(ParamRefs& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct LayerNorm {
    Parameter gamma, beta;
    double eps;

    LayerNorm(const std::string& name, int64_t dim, double eps_ = 1e-5)
        : gamma(name + ".gamma", Tensor::full({dim}, 1.0)),
          beta(name + ".beta", Tensor::zeros({dim})),
          eps(eps_) {}

    Val forward(Tape& t, Val x) { return t.layer_norm(x, t.param(gamma), t.param(beta), eps); }

    void params(ParamRefs& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

struct Embedding {
    Parameter table;  // [vocab, dim]

    Embedding(const std::string& name, int64_t vocab, int64_t dim, Rng& rng)
        : table(name + ".table", Tensor::zeros({vocab, dim})) {
        for (double& x : table.value.data) x = rng.gaussian(0.0, 0.02);
    }

    Val forward(Tape& t, const std::vector<int32_t>& ids) {
        return t.gather_rows(t.param(table), ids);
    }

    void params(ParamRefs& out) { out.push_back(&table); }
};

// Multi-head self-attention with an explicit lower-triangular mask.
// Residual connections and norms belong to the enclosing block.
struct CausalSelfAttention {
    Dense wq, wk, wv, wo;
    int64_t heads, d_model;

    CausalSelfAttention(const std::string& name, int64_t d_model_, int64_t heads_, Rng& rng)
        : wq(name + ".wq", d_model_, d_model_, rng),
          wk(name + ".wk", d_model_, d_model_, rng),
          wv(name + ".wv", d_model_, d_model_, rng),
          wo(name + ".wo", d_model_, d_model_, rng),
          heads(heads_),
          d_model(d_model_) {
        if (d_model_ % heads_ != 0)
            throw std::invalid_argument("attention: d_model " + std::to_string(d_model_) +
                                        " not divisible by heads " + std::to_string(heads_));
    }

    Val forward(Tape& t, Val x) {
        const int64_t dh = d_model / heads;
        Val q = wq.forward(t, x);
        Val k = wk.forward(t, x);
        Val v = wv.forward(t, x);
        std::vector<Val> ctx;
        ctx.reserve(static_cast<size_t>(heads));
        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
        for (int64_t h = 0; h < heads; ++h) {
            Val qh = t.slice_cols(q, h * dh, (h + 1) * dh);
            Val kh = t.slice_cols(k, h * dh, (h + 1) * dh);
            Val vh = t.slice_cols(v, h * dh, (h + 1) * dh);
            Val scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt_dh);
            Val probs = t.causal_softmax_rows(scores);
            ctx.push_back(t.matmul(probs, vh));
        }
        return wo.forward(t, t.concat_cols(ctx));
    }

    void params(ParamRefs& out) {
        wq.params(out);
        wk.params(out);
        wv.params(out);
        wo.params(out);
    }
};

}  // namespace vp::core
