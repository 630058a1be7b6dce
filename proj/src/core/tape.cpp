#include "vocapose/core/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "vocapose/core/kernels.hpp"
#include "vocapose/core/parallel.hpp"

namespace vp::core {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_rank(const std::string& where, const Tensor& t, size_t rank) {
    if (t.rank() != rank)
        throw ShapeError(where, "expected rank " + std::to_string(rank) + " tensor, got shape " +
                                    shape_to_string(t.shape));
}
}  // namespace

Val Tape::push(Tensor value, std::function<void()> back) {
    Node n;
    n.grad = Tensor::zeros(value.shape);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Val{static_cast<int32_t>(nodes_.size() - 1)};
}

Val Tape::constant(Tensor t) { return push(std::move(t), {}); }

Val Tape::param(Parameter& p) {
    Parameter* pp = &p;
    Tensor v = p.value;
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(v), [this, id, pp]() {
        const Tensor& g = nodes_[id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) pp->grad.data[i] += g.data[i];
    });
}

Val Tape::add(Val a, Val b) {
    check_same_shape("add", value(a), value(b));
    Tensor out = value(a);
    const Tensor& bv = value(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, b]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    });
}

Val Tape::sub(Val a, Val b) {
    check_same_shape("sub", value(a), value(b));
    Tensor out = value(a);
    const Tensor& bv = value(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] -= bv.data[i];
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, b]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] -= g.data[i];
        }
    });
}

Val Tape::mul(Val a, Val b) {
    check_same_shape("mul", value(a), value(b));
    Tensor out = value(a);
    const Tensor& bv = value(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, b]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& av = nodes_[a.id].value;
        const Tensor& bv2 = nodes_[b.id].value;
        Tensor& ga = nodes_[a.id].grad;
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i] * bv2.data[i];
            gb.data[i] += g.data[i] * av.data[i];
        }
    });
}

Val Tape::scale(Val a, double c) {
    Tensor out = value(a);
    for (double& x : out.data) x *= c;
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, c]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += c * g.data[i];
    });
}

Val Tape::relu(Val a) {
    Tensor out = value(a);
    for (double& x : out.data) x = x > 0.0 ? x : 0.0;
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& av = nodes_[a.id].value;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i)
            if (av.data[i] > 0.0) ga.data[i] += g.data[i];
    });
}

Val Tape::gelu(Val a) {
    Tensor out = value(a);
    for (double& x : out.data) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& av = nodes_[a.id].value;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) {
            const double x = av.data[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            ga.data[i] += g.data[i] * (cdf + x * pdf);
        }
    });
}

Val Tape::matmul(Val a, Val b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_rank("matmul", av, 2);
    require_rank("matmul", bv, 2);
    if (av.shape[1] != bv.shape[0])
        throw ShapeError("matmul", "inner dimensions disagree: expected lhs " +
                                       shape_to_string(av.shape) + " x rhs [" +
                                       std::to_string(av.shape[1]) + ", n], got rhs " +
                                       shape_to_string(bv.shape));
    const int64_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor out({m, n});
    kernels::matmul_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, b, m, k, n]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& av2 = nodes_[a.id].value;
        const Tensor& bv2 = nodes_[b.id].value;
        Tensor tmp_a({m, k});
        kernels::matmul_nt(g.data.data(), bv2.data.data(), tmp_a.data.data(), m, n, k);
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < ga.numel(); ++i) ga.data[i] += tmp_a.data[i];
        Tensor tmp_b({k, n});
        kernels::matmul_tn(av2.data.data(), g.data.data(), tmp_b.data.data(), k, m, n);
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < gb.numel(); ++i) gb.data[i] += tmp_b.data[i];
    });
}

Val Tape::matmul_nt(Val a, Val b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_rank("matmul_nt", av, 2);
    require_rank("matmul_nt", bv, 2);
    if (av.shape[1] != bv.shape[1])
        throw ShapeError("matmul_nt", av.shape, bv.shape);
    const int64_t m = av.shape[0], k = av.shape[1], n = bv.shape[0];
    Tensor out({m, n});
    kernels::matmul_nt(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, b, m, k, n]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& av2 = nodes_[a.id].value;
        const Tensor& bv2 = nodes_[b.id].value;
        Tensor tmp_a({m, k});
        kernels::matmul_nn(g.data.data(), bv2.data.data(), tmp_a.data.data(), m, n, k);
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < ga.numel(); ++i) ga.data[i] += tmp_a.data[i];
        Tensor tmp_b({n, k});
        kernels::matmul_tn(g.data.data(), av2.data.data(), tmp_b.data.data(), n, m, k);
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < gb.numel(); ++i) gb.data[i] += tmp_b.data[i];
    });
}

Val Tape::transpose(Val a) {
    const Tensor& av = value(a);
    require_rank("transpose", av, 2);
    const int64_t m = av.shape[0], n = av.shape[1];
    Tensor out({n, m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, m, n]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
    });
}

Val Tape::slice_cols(Val a, int64_t lo, int64_t hi) {
    const Tensor& av = value(a);
    require_rank("slice_cols", av, 2);
    if (lo < 0 || hi > av.shape[1] || lo >= hi)
        throw ShapeError("slice_cols", "range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                           ") invalid for shape " + shape_to_string(av.shape));
    const int64_t m = av.shape[0], w = hi - lo;
    Tensor out({m, w});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < w; ++j) out.at(i, j) = av.at(i, lo + j);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, lo, m, w]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < w; ++j) ga.at(i, lo + j) += g.at(i, j);
    });
}

Val Tape::slice_rows(Val a, int64_t lo, int64_t hi) {
    const Tensor& av = value(a);
    require_rank("slice_rows", av, 2);
    if (lo < 0 || hi > av.shape[0] || lo >= hi)
        throw ShapeError("slice_rows", "range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                           ") invalid for shape " + shape_to_string(av.shape));
    const int64_t n = av.shape[1], rows = hi - lo;
    Tensor out({rows, n});
    std::copy_n(av.data.begin() + lo * n, rows * n, out.data.begin());
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, lo, rows, n]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < rows * n; ++i) ga.data[lo * n + i] += g.data[i];
    });
}

Val Tape::concat_cols(const std::vector<Val>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int64_t m = value(parts[0]).shape[0];
    int64_t total = 0;
    for (Val p : parts) {
        const Tensor& t = value(p);
        require_rank("concat_cols", t, 2);
        if (t.shape[0] != m) throw ShapeError("concat_cols", {m, -1}, t.shape);
        total += t.shape[1];
    }
    Tensor out({m, total});
    int64_t off = 0;
    for (Val p : parts) {
        const Tensor& t = value(p);
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < t.shape[1]; ++j) out.at(i, off + j) = t.at(i, j);
        off += t.shape[1];
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    std::vector<Val> ps = parts;
    return push(std::move(out), [this, id, ps, m]() {
        const Tensor& g = nodes_[id].grad;
        int64_t off2 = 0;
        for (Val p : ps) {
            Tensor& gp = nodes_[p.id].grad;
            const int64_t w = gp.shape[1];
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < w; ++j) gp.at(i, j) += g.at(i, off2 + j);
            off2 += w;
        }
    });
}

Val Tape::concat_rows(const std::vector<Val>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const int64_t n = value(parts[0]).shape[1];
    int64_t total = 0;
    for (Val p : parts) {
        const Tensor& t = value(p);
        require_rank("concat_rows", t, 2);
        if (t.shape[1] != n) throw ShapeError("concat_rows", {-1, n}, t.shape);
        total += t.shape[0];
    }
    Tensor out({total, n});
    int64_t off = 0;
    for (Val p : parts) {
        const Tensor& t = value(p);
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + off * n);
        off += t.shape[0];
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    std::vector<Val> ps = parts;
    return push(std::move(out), [this, id, ps, n]() {
        const Tensor& g = nodes_[id].grad;
        int64_t off2 = 0;
        for (Val p : ps) {
            Tensor& gp = nodes_[p.id].grad;
            const int64_t rows = gp.shape[0];
            for (int64_t i = 0; i < rows * n; ++i) gp.data[i] += g.data[off2 * n + i];
            off2 += rows;
        }
    });
}

Val Tape::add_row_vector(Val a, Val v) {
    const Tensor& av = value(a);
    const Tensor& vv = value(v);
    require_rank("add_row_vector", av, 2);
    if (vv.numel() != av.shape[1]) throw ShapeError("add_row_vector", {av.shape[1]}, vv.shape);
    Tensor out = av;
    const int64_t m = av.shape[0], n = av.shape[1];
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(i, j) += vv.data[static_cast<size_t>(j)];
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, v, m, n]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        Tensor& gv = nodes_[v.id].grad;
        for (int64_t i = 0; i < m * n; ++i) ga.data[i] += g.data[i];
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) gv.data[static_cast<size_t>(j)] += g.at(i, j);
    });
}

Val Tape::tile_cols(Val a, int64_t n) {
    const Tensor& av = value(a);
    require_rank("tile_cols", av, 2);
    if (av.shape[1] != 1) throw ShapeError("tile_cols", {av.shape[0], 1}, av.shape);
    if (n < 1) throw std::invalid_argument("tile_cols: n must be >= 1");
    const int64_t m = av.shape[0];
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(i, j) = av.at(i, 0);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, a, m, n]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& ga = nodes_[a.id].grad;
        for (int64_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int64_t j = 0; j < n; ++j) acc += g.at(i, j);
            ga.at(i, 0) += acc;
        }
    });
}

Val Tape::layer_norm(Val x, Val gamma, Val beta, double eps) {
    const Tensor& xv = value(x);
    require_rank("layer_norm", xv, 2);
    const int64_t m = xv.shape[0], n = xv.shape[1];
    const Tensor& gv = value(gamma);
    const Tensor& bv = value(beta);
    if (gv.numel() != n) throw ShapeError("layer_norm gamma", {n}, gv.shape);
    if (bv.numel() != n) throw ShapeError("layer_norm beta", {n}, bv.shape);

    Tensor out({m, n});
    Tensor xhat({m, n});
    Tensor inv_std({m});
    for (int64_t i = 0; i < m; ++i) {
        double mu = 0.0;
        for (int64_t j = 0; j < n; ++j) mu += xv.at(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            const double d = xv.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std.at(i) = inv;
        for (int64_t j = 0; j < n; ++j) {
            const double xh = (xv.at(i, j) - mu) * inv;
            xhat.at(i, j) = xh;
            out.at(i, j) = gv.data[static_cast<size_t>(j)] * xh + bv.data[static_cast<size_t>(j)];
        }
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, x, gamma, beta, m, n, xh = std::move(xhat),
                                 inv = std::move(inv_std)]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& gam = nodes_[gamma.id].value;
        Tensor& gx = nodes_[x.id].grad;
        Tensor& gg = nodes_[gamma.id].grad;
        Tensor& gb = nodes_[beta.id].grad;
        for (int64_t i = 0; i < m; ++i) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (int64_t j = 0; j < n; ++j) {
                const double dxh = g.at(i, j) * gam.data[static_cast<size_t>(j)];
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * xh.at(i, j);
                gg.data[static_cast<size_t>(j)] += g.at(i, j) * xh.at(i, j);
                gb.data[static_cast<size_t>(j)] += g.at(i, j);
            }
            mean_dxhat /= static_cast<double>(n);
            mean_dxhat_xhat /= static_cast<double>(n);
            for (int64_t j = 0; j < n; ++j) {
                const double dxh = g.at(i, j) * gam.data[static_cast<size_t>(j)];
                gx.at(i, j) += inv.at(i) * (dxh - mean_dxhat - xh.at(i, j) * mean_dxhat_xhat);
            }
        }
    });
}

Val Tape::softmax_rows(Val x) {
    const Tensor& xv = value(x);
    require_rank("softmax_rows", xv, 2);
    const int64_t m = xv.shape[0], n = xv.shape[1];
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        double mx = xv.at(i, 0);
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, xv.at(i, j));
        double denom = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            const double e = std::exp(xv.at(i, j) - mx);
            out.at(i, j) = e;
            denom += e;
        }
        const double invd = 1.0 / denom;
        for (int64_t j = 0; j < n; ++j) out.at(i, j) *= invd;
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, x, m, n]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& y = nodes_[id].value;
        Tensor& gx = nodes_[x.id].grad;
        for (int64_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (int64_t j = 0; j < n; ++j) dot += g.at(i, j) * y.at(i, j);
            for (int64_t j = 0; j < n; ++j) gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    });
}

Val Tape::causal_softmax_rows(Val x) {
    const Tensor& xv = value(x);
    require_rank("causal_softmax_rows", xv, 2);
    if (xv.shape[0] != xv.shape[1])
        throw ShapeError("causal_softmax_rows", {xv.shape[0], xv.shape[0]}, xv.shape);
    const int64_t t = xv.shape[0];
    Tensor out({t, t});
    for (int64_t i = 0; i < t; ++i) {
        double mx = xv.at(i, 0);
        for (int64_t j = 1; j <= i; ++j) mx = std::max(mx, xv.at(i, j));
        double denom = 0.0;
        for (int64_t j = 0; j <= i; ++j) {
            const double e = std::exp(xv.at(i, j) - mx);
            out.at(i, j) = e;
            denom += e;
        }
        const double invd = 1.0 / denom;
        for (int64_t j = 0; j <= i; ++j) out.at(i, j) *= invd;
    }
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, x, t]() {
        const Tensor& g = nodes_[id].grad;
        const Tensor& y = nodes_[id].value;
        Tensor& gx = nodes_[x.id].grad;
        for (int64_t i = 0; i < t; ++i) {
            double dot = 0.0;
            for (int64_t j = 0; j <= i; ++j) dot += g.at(i, j) * y.at(i, j);
            for (int64_t j = 0; j <= i; ++j) gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    });
}

Val Tape::gather_rows(Val table, std::vector<int32_t> ids) {
    const Tensor& tv = value(table);
    require_rank("gather_rows", tv, 2);
    const int64_t v = tv.shape[0], d = tv.shape[1];
    for (int32_t i : ids)
        if (i < 0 || i >= v)
            throw std::out_of_range("gather_rows: id " + std::to_string(i) + " outside table of " +
                                    std::to_string(v) + " rows");
    const int64_t n = static_cast<int64_t>(ids.size());
    Tensor out({n, d});
    for (int64_t i = 0; i < n; ++i)
        std::copy_n(tv.data.begin() + static_cast<int64_t>(ids[static_cast<size_t>(i)]) * d, d,
                    out.data.begin() + i * d);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, table, ids = std::move(ids), d]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& gt = nodes_[table.id].grad;
        for (size_t i = 0; i < ids.size(); ++i) {
            double* dst = gt.data.data() + static_cast<int64_t>(ids[i]) * d;
            const double* src = g.data.data() + static_cast<int64_t>(i) * d;
            for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

Val Tape::sum(Val a) {
    const Tensor& av = value(a);
    double s = 0.0;
    for (double x : av.data) s += x;
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(Tensor::scalar(s), [this, id, a]() {
        const double g = nodes_[id].grad.at(0);
        Tensor& ga = nodes_[a.id].grad;
        for (double& x : ga.data) x += g;
    });
}

Val Tape::mean(Val a) {
    const Tensor& av = value(a);
    if (av.numel() == 0) throw std::invalid_argument("mean of empty tensor");
    double s = 0.0;
    for (double x : av.data) s += x;
    const double inv_n = 1.0 / static_cast<double>(av.numel());
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(Tensor::scalar(s * inv_n), [this, id, a, inv_n]() {
        const double g = nodes_[id].grad.at(0) * inv_n;
        Tensor& ga = nodes_[a.id].grad;
        for (double& x : ga.data) x += g;
    });
}

Val Tape::cross_entropy_mean(Val logits, std::vector<int32_t> targets, int64_t loss_from_row) {
    const Tensor& lv = value(logits);
    require_rank("cross_entropy_mean", lv, 2);
    const int64_t t = lv.shape[0], v = lv.shape[1];
    if (static_cast<int64_t>(targets.size()) != t)
        throw ShapeError("cross_entropy_mean", "targets length " + std::to_string(targets.size()) +
                                                   " != rows " + std::to_string(t));
    if (loss_from_row < 0 || loss_from_row >= t)
        throw std::invalid_argument("cross_entropy_mean: loss_from_row out of range");
    for (int64_t i = loss_from_row; i < t; ++i) {
        const int32_t tid = targets[static_cast<size_t>(i)];
        if (tid < 0 || tid >= v)
            throw std::out_of_range("cross_entropy_mean: target id " + std::to_string(tid) +
                                    " outside vocabulary of " + std::to_string(v));
    }
    const int64_t rows = t - loss_from_row;
    auto probs = std::make_shared<Tensor>(Shape{t, v});
    std::vector<double> row_loss(static_cast<size_t>(t), 0.0);
    parallel_for(rows, [&](int64_t r) {
        const int64_t i = loss_from_row + r;
        double mx = lv.at(i, 0);
        for (int64_t j = 1; j < v; ++j) mx = std::max(mx, lv.at(i, j));
        double denom = 0.0;
        for (int64_t j = 0; j < v; ++j) {
            const double e = std::exp(lv.at(i, j) - mx);
            probs->at(i, j) = e;
            denom += e;
        }
        const double invd = 1.0 / denom;
        for (int64_t j = 0; j < v; ++j) probs->at(i, j) *= invd;
        const double lse = mx + std::log(denom);
        row_loss[static_cast<size_t>(i)] = lse - lv.at(i, targets[static_cast<size_t>(i)]);
    });
    double total = 0.0;
    for (double x : row_loss) total += x;
    const double inv_rows = 1.0 / static_cast<double>(rows);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(Tensor::scalar(total * inv_rows),
                [this, id, logits, targets = std::move(targets), probs, loss_from_row, t, v, inv_rows]() {
                    const double g = nodes_[id].grad.at(0) * inv_rows;
                    Tensor& gl = nodes_[logits.id].grad;
                    for (int64_t i = loss_from_row; i < t; ++i) {
                        for (int64_t j = 0; j < v; ++j) gl.at(i, j) += g * probs->at(i, j);
                        gl.at(i, targets[static_cast<size_t>(i)]) -= g;
                    }
                });
}

Val Tape::smooth_l1_mean(Val pred, Val target) {
    check_same_shape("smooth_l1_mean", value(pred), value(target));
    const Tensor& pv = value(pred);
    const Tensor& tv = value(target);
    const int64_t n = pv.numel();
    if (n == 0) throw std::invalid_argument("smooth_l1_mean of empty tensor");
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double e = pv.data[i] - tv.data[i];
        const double a = std::abs(e);
        total += a <= 1.0 ? 0.5 * e * e : a - 0.5;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(Tensor::scalar(total * inv_n), [this, id, pred, target, n, inv_n]() {
        const double g = nodes_[id].grad.at(0) * inv_n;
        const Tensor& pv2 = nodes_[pred.id].value;
        const Tensor& tv2 = nodes_[target.id].value;
        Tensor& gp = nodes_[pred.id].grad;
        Tensor& gt = nodes_[target.id].grad;
        for (int64_t i = 0; i < n; ++i) {
            const double e = pv2.data[i] - tv2.data[i];
            const double d = std::clamp(e, -1.0, 1.0) * g;
            gp.data[i] += d;
            gt.data[i] -= d;
        }
    });
}

Val Tape::mse_mean(Val a, Val b) {
    check_same_shape("mse_mean", value(a), value(b));
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    const int64_t n = av.numel();
    if (n == 0) throw std::invalid_argument("mse_mean of empty tensor");
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double e = av.data[i] - bv.data[i];
        total += e * e;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(Tensor::scalar(total * inv_n), [this, id, a, b, n, inv_n]() {
        const double g = nodes_[id].grad.at(0) * inv_n;
        const Tensor& av2 = nodes_[a.id].value;
        const Tensor& bv2 = nodes_[b.id].value;
        Tensor& ga = nodes_[a.id].grad;
        Tensor& gb = nodes_[b.id].grad;
        for (int64_t i = 0; i < n; ++i) {
            const double d = 2.0 * (av2.data[i] - bv2.data[i]) * g;
            ga.data[i] += d;
            gb.data[i] -= d;
        }
    });
}

Val Tape::straight_through(Val z, Tensor codes) {
    check_same_shape("straight_through", value(z), codes);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(codes), [this, id, z]() {
        const Tensor& g = nodes_[id].grad;
        Tensor& gz = nodes_[z.id].grad;
        for (int64_t i = 0; i < g.numel(); ++i) gz.data[i] += g.data[i];
    });
}

Val Tape::conv1d(Val x, Val w, Val bias, int64_t stride, int64_t pad) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(bias);
    require_rank("conv1d input", xv, 2);
    require_rank("conv1d weight", wv, 3);
    if (stride < 1 || pad < 0) throw std::invalid_argument("conv1d: stride must be >= 1, pad >= 0");
    const int64_t cin = xv.shape[0], l = xv.shape[1];
    const int64_t cout = wv.shape[0], kw = wv.shape[2];
    if (wv.shape[1] != cin) throw ShapeError("conv1d weight", {cout, cin, kw}, wv.shape);
    if (bv.numel() != cout) throw ShapeError("conv1d bias", {cout}, bv.shape);
    if (l + 2 * pad < kw)
        throw ShapeError("conv1d", "input length " + std::to_string(l) + " (+2*" + std::to_string(pad) +
                                       " pad) shorter than kernel " + std::to_string(kw));
    const int64_t lout = (l + 2 * pad - kw) / stride + 1;
    Tensor out({cout, lout});
    kernels::conv1d_forward(xv.data.data(), wv.data.data(), bv.data.data(), out.data.data(), cin, l,
                            cout, kw, stride, pad, lout);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, x, w, bias, cin, l, cout, kw, stride, pad, lout]() {
        const Tensor& g = nodes_[id].grad;
        kernels::conv1d_grad_input(g.data.data(), nodes_[w.id].value.data.data(),
                                   nodes_[x.id].grad.data.data(), cin, l, cout, kw, stride, pad, lout);
        kernels::conv1d_grad_weight(g.data.data(), nodes_[x.id].value.data.data(),
                                    nodes_[w.id].grad.data.data(), nodes_[bias.id].grad.data.data(),
                                    cin, l, cout, kw, stride, pad, lout);
    });
}

Val Tape::conv1d_transpose(Val x, Val w, Val bias, int64_t stride) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(bias);
    require_rank("conv1d_transpose input", xv, 2);
    require_rank("conv1d_transpose weight", wv, 3);
    if (stride < 1) throw std::invalid_argument("conv1d_transpose: stride must be >= 1");
    const int64_t cin = xv.shape[0], l = xv.shape[1];
    const int64_t cout = wv.shape[1], kw = wv.shape[2];
    if (wv.shape[0] != cin) throw ShapeError("conv1d_transpose weight", {cin, cout, kw}, wv.shape);
    if (bv.numel() != cout) throw ShapeError("conv1d_transpose bias", {cout}, bv.shape);
    const int64_t lout = (l - 1) * stride + kw;
    Tensor out({cout, lout});
    kernels::convt1d_forward(xv.data.data(), wv.data.data(), bv.data.data(), out.data.data(), cin, l,
                             cout, kw, stride, lout);
    const int32_t id = static_cast<int32_t>(nodes_.size());
    return push(std::move(out), [this, id, x, w, bias, cin, l, cout, kw, stride, lout]() {
        const Tensor& g = nodes_[id].grad;
        kernels::convt1d_grad_input(g.data.data(), nodes_[w.id].value.data.data(),
                                    nodes_[x.id].grad.data.data(), cin, l, cout, kw, stride, lout);
        kernels::convt1d_grad_weight(g.data.data(), nodes_[x.id].value.data.data(),
                                     nodes_[w.id].grad.data.data(), nodes_[bias.id].grad.data.data(),
                                     cin, l, cout, kw, stride, lout);
    });
}

void Tape::backward(Val loss) {
    const Tensor& lv = value(loss);
    if (lv.numel() != 1)
        throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                    shape_to_string(lv.shape));
    node(loss).grad.at(0) = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back();
    }
}

}  // namespace vp::core
