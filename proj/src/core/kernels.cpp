#include "vocapose/core/kernels.hpp"

#include <cstring>
#include <limits>

#include "vocapose/core/parallel.hpp"

namespace vp::core {

namespace {

inline void matmul_nn_row(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t n) {
    double* ci = c + i * n;
    std::memset(ci, 0, static_cast<size_t>(n) * sizeof(double));
    const double* ai = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
        const double av = ai[p];
        if (av == 0.0) continue;
        const double* bp = b + p * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t n) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double acc = 0.0;
        for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] = acc;
    }
}

inline void matmul_tn_row(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t m, int64_t n) {
    // c[i, :] = sum_p a[p, i] * b[p, :]
    double* ci = c + i * n;
    std::memset(ci, 0, static_cast<size_t>(n) * sizeof(double));
    for (int64_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        if (av == 0.0) continue;
        const double* bp = b + p * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
}

inline void conv1d_forward_cout(const double* x, const double* w, const double* bias, double* y,
                                int64_t co, int64_t cin, int64_t l, int64_t kw, int64_t stride,
                                int64_t pad, int64_t lout) {
    double* yo = y + co * lout;
    const double b = bias ? bias[co] : 0.0;
    for (int64_t t = 0; t < lout; ++t) {
        double acc = b;
        const int64_t base = t * stride - pad;
        for (int64_t ci = 0; ci < cin; ++ci) {
            const double* xc = x + ci * l;
            const double* wc = w + (co * cin + ci) * kw;
            for (int64_t q = 0; q < kw; ++q) {
                const int64_t j = base + q;
                if (j >= 0 && j < l) acc += wc[q] * xc[j];
            }
        }
        yo[t] = acc;
    }
}

inline void conv1d_grad_input_cin(const double* gy, const double* w, double* gx,
                                  int64_t ci, int64_t cin, int64_t l, int64_t cout, int64_t kw,
                                  int64_t stride, int64_t pad, int64_t lout) {
    double* gxc = gx + ci * l;
    for (int64_t t = 0; t < lout; ++t) {
        const int64_t base = t * stride - pad;
        for (int64_t co = 0; co < cout; ++co) {
            const double g = gy[co * lout + t];
            if (g == 0.0) continue;
            const double* wc = w + (co * cin + ci) * kw;
            for (int64_t q = 0; q < kw; ++q) {
                const int64_t j = base + q;
                if (j >= 0 && j < l) gxc[j] += g * wc[q];
            }
        }
    }
}

inline void conv1d_grad_weight_cout(const double* gy, const double* x, double* gw, double* gbias,
                                    int64_t co, int64_t cin, int64_t l, int64_t kw, int64_t stride,
                                    int64_t pad, int64_t lout) {
    const double* gyo = gy + co * lout;
    double bacc = 0.0;
    for (int64_t t = 0; t < lout; ++t) bacc += gyo[t];
    if (gbias) gbias[co] += bacc;
    for (int64_t ci = 0; ci < cin; ++ci) {
        const double* xc = x + ci * l;
        double* gwc = gw + (co * cin + ci) * kw;
        for (int64_t q = 0; q < kw; ++q) {
            double acc = 0.0;
            for (int64_t t = 0; t < lout; ++t) {
                const int64_t j = t * stride - pad + q;
                if (j >= 0 && j < l) acc += gyo[t] * xc[j];
            }
            gwc[q] += acc;
        }
    }
}

inline void convt1d_forward_cout(const double* x, const double* w, const double* bias, double* y,
                                 int64_t co, int64_t cin, int64_t l, int64_t cout, int64_t kw,
                                 int64_t stride, int64_t lout) {
    double* yo = y + co * lout;
    const double b = bias ? bias[co] : 0.0;
    for (int64_t j = 0; j < lout; ++j) yo[j] = b;
    for (int64_t ci = 0; ci < cin; ++ci) {
        const double* xc = x + ci * l;
        const double* wc = w + (ci * cout + co) * kw;
        for (int64_t t = 0; t < l; ++t) {
            const double xv = xc[t];
            if (xv == 0.0) continue;
            double* dst = yo + t * stride;
            for (int64_t q = 0; q < kw; ++q) dst[q] += xv * wc[q];
        }
    }
}

inline void convt1d_grad_input_cin(const double* gy, const double* w, double* gx,
                                   int64_t ci, int64_t l, int64_t cout, int64_t kw,
                                   int64_t stride, int64_t lout) {
    double* gxc = gx + ci * l;
    for (int64_t t = 0; t < l; ++t) {
        double acc = 0.0;
        for (int64_t co = 0; co < cout; ++co) {
            const double* gyo = gy + co * lout + t * stride;
            const double* wc = w + (ci * cout + co) * kw;
            for (int64_t q = 0; q < kw; ++q) acc += gyo[q] * wc[q];
        }
        gxc[t] += acc;
    }
}

inline void convt1d_grad_weight_cin(const double* gy, const double* x, double* gw,
                                    int64_t ci, int64_t l, int64_t cout, int64_t kw,
                                    int64_t stride, int64_t lout) {
    const double* xc = x + ci * l;
    for (int64_t co = 0; co < cout; ++co) {
        double* gwc = gw + (ci * cout + co) * kw;
        const double* gyo = gy + co * lout;
        for (int64_t q = 0; q < kw; ++q) {
            double acc = 0.0;
            for (int64_t t = 0; t < l; ++t) acc += xc[t] * gyo[t * stride + q];
            gwc[q] += acc;
        }
    }
}

inline void nearest_code_one(const double* z, const double* codebook, int32_t* idx,
                             int64_t i, int64_t k, int64_t d) {
    const double* zi = z + i * d;
    double best = std::numeric_limits<double>::infinity();
    int32_t bestk = 0;
    for (int64_t c = 0; c < k; ++c) {
        const double* cc = codebook + c * d;
        double dist = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double diff = zi[j] - cc[j];
            dist += diff * diff;
        }
        if (dist < best) {
            best = dist;
            bestk = static_cast<int32_t>(c);
        }
    }
    idx[i] = bestk;
}

}  // namespace

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) matmul_nn_row(a, b, c, i, k, n);
}
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n);
}
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, k, m, n);
}

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                    int64_t lout) {
    for (int64_t co = 0; co < cout; ++co)
        conv1d_forward_cout(x, w, bias, y, co, cin, l, kw, stride, pad, lout);
}
void conv1d_grad_input(const double* gy, const double* w, double* gx,
                       int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                       int64_t lout) {
    for (int64_t ci = 0; ci < cin; ++ci)
        conv1d_grad_input_cin(gy, w, gx, ci, cin, l, cout, kw, stride, pad, lout);
}
void conv1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                        int64_t lout) {
    for (int64_t co = 0; co < cout; ++co)
        conv1d_grad_weight_cout(gy, x, gw, gbias, co, cin, l, kw, stride, pad, lout);
}

void convt1d_forward(const double* x, const double* w, const double* bias, double* y,
                     int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    for (int64_t co = 0; co < cout; ++co)
        convt1d_forward_cout(x, w, bias, y, co, cin, l, cout, kw, stride, lout);
}
void convt1d_grad_input(const double* gy, const double* w, double* gx,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    for (int64_t ci = 0; ci < cin; ++ci)
        convt1d_grad_input_cin(gy, w, gx, ci, l, cout, kw, stride, lout);
}
void convt1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                         int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    if (gbias) {
        for (int64_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            const double* gyo = gy + co * lout;
            for (int64_t j = 0; j < lout; ++j) acc += gyo[j];
            gbias[co] += acc;
        }
    }
    for (int64_t ci = 0; ci < cin; ++ci)
        convt1d_grad_weight_cin(gy, x, gw, ci, l, cout, kw, stride, lout);
}

void nearest_code(const double* z, const double* codebook, int32_t* idx,
                  int64_t n, int64_t k, int64_t d) {
    for (int64_t i = 0; i < n; ++i) nearest_code_one(z, codebook, idx, i, k, d);
}

}  // namespace serial

namespace kernels {

void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    parallel_for(m, [&](int64_t i) { matmul_nn_row(a, b, c, i, k, n); });
}
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    parallel_for(m, [&](int64_t i) { matmul_nt_row(a, b, c, i, k, n); });
}
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    parallel_for(m, [&](int64_t i) { matmul_tn_row(a, b, c, i, k, m, n); });
}

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                    int64_t lout) {
    parallel_for(cout, [&](int64_t co) { conv1d_forward_cout(x, w, bias, y, co, cin, l, kw, stride, pad, lout); });
}
void conv1d_grad_input(const double* gy, const double* w, double* gx,
                       int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                       int64_t lout) {
    parallel_for(cin, [&](int64_t ci) { conv1d_grad_input_cin(gy, w, gx, ci, cin, l, cout, kw, stride, pad, lout); });
}
void conv1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                        int64_t lout) {
    parallel_for(cout, [&](int64_t co) { conv1d_grad_weight_cout(gy, x, gw, gbias, co, cin, l, kw, stride, pad, lout); });
}

void convt1d_forward(const double* x, const double* w, const double* bias, double* y,
                     int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    parallel_for(cout, [&](int64_t co) { convt1d_forward_cout(x, w, bias, y, co, cin, l, cout, kw, stride, lout); });
}
void convt1d_grad_input(const double* gy, const double* w, double* gx,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    parallel_for(cin, [&](int64_t ci) { convt1d_grad_input_cin(gy, w, gx, ci, l, cout, kw, stride, lout); });
}
void convt1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                         int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout) {
    if (gbias) {
        for (int64_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            const double* gyo = gy + co * lout;
            for (int64_t j = 0; j < lout; ++j) acc += gyo[j];
            gbias[co] += acc;
        }
    }
    parallel_for(cin, [&](int64_t ci) { convt1d_grad_weight_cin(gy, x, gw, ci, l, cout, kw, stride, lout); });
}

void nearest_code(const double* z, const double* codebook, int32_t* idx,
                  int64_t n, int64_t k, int64_t d) {
    parallel_for(n, [&](int64_t i) { nearest_code_one(z, codebook, idx, i, k, d); });
}

}  // namespace kernels

}  // namespace vp::core
