#pragma once

#include <cstdint>
#include <vector>

// Hot inner loops. Each kernel exists twice: vp::core::serial holds the
// plain reference implementation used by tests and as the 1-thread path,
// vp::core::kernels holds the OpenMP variant. Both produce bitwise-identical
// output: parallel loops split work per output row/element and never reorder
// the inner accumulation.

namespace vp::core::serial {

// C[m,n] = A[m,k] * B[k,n]
void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// C[m,n] = A[k,m]^T * B[k,n]
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

// x [cin, l] (+ zero padding `pad` on both sides), w [cout, cin, kw], y [cout, lout]
void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                    int64_t lout);
void conv1d_grad_input(const double* gy, const double* w, double* gx,
                       int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                       int64_t lout);
void conv1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                        int64_t lout);

// x [cin, l], w [cin, cout, kw], y [cout, (l-1)*stride + kw]
void convt1d_forward(const double* x, const double* w, const double* bias, double* y,
                     int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);
void convt1d_grad_input(const double* gy, const double* w, double* gx,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);
void convt1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                         int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);

// For each of n row vectors in z [n, d]: index of the nearest codebook row
// (squared L2, ties to the lowest index).
void nearest_code(const double* z, const double* codebook, int32_t* idx,
                  int64_t n, int64_t k, int64_t d);

}  // namespace vp::core::serial

namespace vp::core::kernels {

void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                    int64_t lout);
void conv1d_grad_input(const double* gy, const double* w, double* gx,
                       int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                       int64_t lout);
void conv1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t pad,
                        int64_t lout);

void convt1d_forward(const double* x, const double* w, const double* bias, double* y,
                     int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);
void convt1d_grad_input(const double* gy, const double* w, double* gx,
                        int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);
void convt1d_grad_weight(const double* gy, const double* x, double* gw, double* gbias,
                         int64_t cin, int64_t l, int64_t cout, int64_t kw, int64_t stride, int64_t lout);

void nearest_code(const double* z, const double* codebook, int32_t* idx,
                  int64_t n, int64_t k, int64_t d);

}  // namespace vp::core::kernels
