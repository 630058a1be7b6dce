#pragma once

#include <vector>

#include "vocapose/core/tensor.hpp"

namespace vp::metrics {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. vectors holds the
// eigenvectors as columns, paired with values (ascending).
struct SymEig {
    std::vector<double> values;
    core::Tensor vectors;  // [n, n]
};
SymEig sym_eig(const core::Tensor& a);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-neg_tol, 0) clamp to zero; anything below -neg_tol is an error.
core::Tensor sqrtm_psd(const core::Tensor& a, double neg_tol = 1e-8);

// Tr((A B)^{1/2}) for symmetric PSD A, B, via eig of the symmetrized product
// A^{1/2} B A^{1/2}. Same negative-eigenvalue policy as sqrtm_psd.
double trace_sqrt_product(const core::Tensor& a, const core::Tensor& b, double neg_tol = 1e-8);

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
core::Tensor cholesky(const core::Tensor& a);

// SVD of a 3x3 matrix (row-major) with U, V proper orthonormal bases;
// singular values descending.
struct Svd3 {
    double u[9];
    double s[3];
    double v[9];
};
Svd3 svd3(const double* a);

// Similarity (translation + rotation + uniform scale) aligning source points
// onto target, least squares: target ~= scale * R * source + t.
struct Similarity {
    double rotation[9];
    double scale = 1.0;
    double translation[3] = {0, 0, 0};
};
Similarity umeyama_alignment(const std::vector<double>& source_xyz,
                             const std::vector<double>& target_xyz);  // flat [n*3] each

}  // namespace vp::metrics
