#include "vocapose/metrics/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace vp::metrics {

using core::Tensor;

namespace {
void require_square(const char* where, const Tensor& a) {
    if (a.rank() != 2 || a.shape[0] != a.shape[1])
        throw core::ShapeError(where, "expected square matrix, got " + core::shape_to_string(a.shape));
}
}  // namespace

SymEig sym_eig(const Tensor& a_in) {
    require_square("sym_eig", a_in);
    const int64_t n = a_in.shape[0];
    Tensor a = a_in;
    // enforce symmetry before rotating
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a.at(i, j) + a.at(j, i));
            a.at(i, j) = m;
            a.at(j, i) = m;
        }
    Tensor v({n, n});
    for (int64_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = i + 1; j < n; ++j) s += a.at(i, j) * a.at(i, j);
        return std::sqrt(2.0 * s);
    };
    double scale = 0.0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a.at(i, j)));
    const double tol = std::max(scale, 1.0) * 1e-14;

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int64_t p = 0; p < n - 1; ++p) {
            for (int64_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= tol * 1e-2) continue;
                const double app = a.at(p, p), aqq = a.at(q, q);
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int64_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int64_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int64_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEig out;
    out.values.resize(static_cast<size_t>(n));
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int64_t x, int64_t y) { return a.at(x, x) < a.at(y, y); });
    out.vectors = Tensor({n, n});
    for (int64_t col = 0; col < n; ++col) {
        const int64_t src = order[static_cast<size_t>(col)];
        out.values[static_cast<size_t>(col)] = a.at(src, src);
        for (int64_t row = 0; row < n; ++row) out.vectors.at(row, col) = v.at(row, src);
    }
    return out;
}

Tensor sqrtm_psd(const Tensor& a, double neg_tol) {
    SymEig e = sym_eig(a);
    const int64_t n = a.shape[0];
    for (double& lam : e.values) {
        if (lam < -neg_tol)
            throw std::runtime_error("sqrtm_psd: matrix is not PSD (eigenvalue " +
                                     std::to_string(lam) + " below -" + std::to_string(neg_tol) + ")");
        lam = lam < 0.0 ? 0.0 : lam;
    }
    Tensor out({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < n; ++k)
                acc += e.vectors.at(i, k) * std::sqrt(e.values[static_cast<size_t>(k)]) *
                       e.vectors.at(j, k);
            out.at(i, j) = acc;
        }
    return out;
}

double trace_sqrt_product(const Tensor& a, const Tensor& b, double neg_tol) {
    require_square("trace_sqrt_product", a);
    core::check_same_shape("trace_sqrt_product", a, b);
    const int64_t n = a.shape[0];
    const Tensor s = sqrtm_psd(a, neg_tol);
    // m = s * b * s
    Tensor sb({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < n; ++k) acc += s.at(i, k) * b.at(k, j);
            sb.at(i, j) = acc;
        }
    Tensor m({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < n; ++k) acc += sb.at(i, k) * s.at(k, j);
            m.at(i, j) = acc;
        }
    SymEig e = sym_eig(m);
    double tr = 0.0;
    for (double lam : e.values) {
        if (lam < -neg_tol)
            throw std::runtime_error("trace_sqrt_product: product is not PSD (eigenvalue " +
                                     std::to_string(lam) + ")");
        tr += std::sqrt(std::max(lam, 0.0));
    }
    return tr;
}

Tensor cholesky(const Tensor& a) {
    require_square("cholesky", a);
    const int64_t n = a.shape[0];
    Tensor l({n, n});
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j <= i; ++j) {
            double acc = a.at(i, j);
            for (int64_t k = 0; k < j; ++k) acc -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (acc <= 0.0)
                    throw std::runtime_error("cholesky: matrix not positive definite at pivot " +
                                             std::to_string(i));
                l.at(i, i) = std::sqrt(acc);
            } else {
                l.at(i, j) = acc / l.at(j, j);
            }
        }
    }
    return l;
}

namespace {
void cross3(const double* a, const double* b, double* out) {
    out[0] = a[1] * b[2] - a[2] * b[1];
    out[1] = a[2] * b[0] - a[0] * b[2];
    out[2] = a[0] * b[1] - a[1] * b[0];
}
double norm3(const double* a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
}  // namespace

Svd3 svd3(const double* a) {
    // eigen-decompose A^T A for V and singular values, rebuild U column-wise
    Tensor ata({3, 3});
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < 3; ++k) acc += a[k * 3 + i] * a[k * 3 + j];
            ata.at(i, j) = acc;
        }
    SymEig e = sym_eig(ata);  // ascending
    Svd3 out{};
    // descending order of singular values
    for (int col = 0; col < 3; ++col) {
        const int src = 2 - col;
        out.s[col] = std::sqrt(std::max(e.values[static_cast<size_t>(src)], 0.0));
        for (int row = 0; row < 3; ++row) out.v[row * 3 + col] = e.vectors.at(row, src);
    }
    // U_i = A v_i / s_i where defined; complete degenerate directions orthogonally
    double umax = 0.0;
    for (int i = 0; i < 9; ++i) umax = std::max(umax, std::abs(a[i]));
    const double tol = std::max(umax, 1.0) * 1e-12;
    bool have[3] = {false, false, false};
    for (int col = 0; col < 3; ++col) {
        if (out.s[col] > tol) {
            for (int row = 0; row < 3; ++row) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += a[row * 3 + k] * out.v[k * 3 + col];
                out.u[row * 3 + col] = acc / out.s[col];
            }
            have[col] = true;
        }
    }
    for (int col = 0; col < 3; ++col) {
        if (have[col]) continue;
        const int c1 = (col + 1) % 3, c2 = (col + 2) % 3;
        double u1[3], u2[3], ux[3];
        for (int r = 0; r < 3; ++r) {
            u1[r] = have[c1] ? out.u[r * 3 + c1] : (r == c1 ? 1.0 : 0.0);
            u2[r] = have[c2] ? out.u[r * 3 + c2] : (r == c2 ? 1.0 : 0.0);
        }
        cross3(u1, u2, ux);
        double nn = norm3(ux);
        if (nn < 1e-12) {  // pick any axis not parallel to u1
            u2[0] = 1.0; u2[1] = 0.0; u2[2] = 0.0;
            cross3(u1, u2, ux);
            nn = norm3(ux);
            if (nn < 1e-12) {
                u2[0] = 0.0; u2[1] = 1.0;
                cross3(u1, u2, ux);
                nn = norm3(ux);
            }
        }
        for (int r = 0; r < 3; ++r) out.u[r * 3 + col] = ux[r] / nn;
        have[col] = true;
    }
    return out;
}

Similarity umeyama_alignment(const std::vector<double>& source_xyz,
                             const std::vector<double>& target_xyz) {
    if (source_xyz.size() != target_xyz.size() || source_xyz.size() % 3 != 0 ||
        source_xyz.empty())
        throw std::invalid_argument("umeyama: point lists must be equal-length multiples of 3");
    const int64_t n = static_cast<int64_t>(source_xyz.size() / 3);
    double mu_s[3] = {0, 0, 0}, mu_t[3] = {0, 0, 0};
    for (int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            mu_s[c] += source_xyz[static_cast<size_t>(i * 3 + c)];
            mu_t[c] += target_xyz[static_cast<size_t>(i * 3 + c)];
        }
    for (int c = 0; c < 3; ++c) {
        mu_s[c] /= static_cast<double>(n);
        mu_t[c] /= static_cast<double>(n);
    }
    double sigma = 0.0, cov[9] = {0};
    for (int64_t i = 0; i < n; ++i) {
        double xs[3], xt[3];
        for (int c = 0; c < 3; ++c) {
            xs[c] = source_xyz[static_cast<size_t>(i * 3 + c)] - mu_s[c];
            xt[c] = target_xyz[static_cast<size_t>(i * 3 + c)] - mu_t[c];
            sigma += xs[c] * xs[c];
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cov[r * 3 + c] += xt[r] * xs[c];
    }
    sigma /= static_cast<double>(n);
    for (int i = 0; i < 9; ++i) cov[i] /= static_cast<double>(n);

    Svd3 svd = svd3(cov);
    // det(U V^T) sign decides the reflection fix on the smallest singular value
    double uvt[9];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += svd.u[r * 3 + k] * svd.v[c * 3 + k];
            uvt[r * 3 + c] = acc;
        }
    const double det = uvt[0] * (uvt[4] * uvt[8] - uvt[5] * uvt[7]) -
                       uvt[1] * (uvt[3] * uvt[8] - uvt[5] * uvt[6]) +
                       uvt[2] * (uvt[3] * uvt[7] - uvt[4] * uvt[6]);
    double dsign[3] = {1.0, 1.0, det < 0.0 ? -1.0 : 1.0};

    Similarity sim;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += svd.u[r * 3 + k] * dsign[k] * svd.v[c * 3 + k];
            sim.rotation[r * 3 + c] = acc;
        }
    const double trace_ds = svd.s[0] * dsign[0] + svd.s[1] * dsign[1] + svd.s[2] * dsign[2];
    sim.scale = sigma > 1e-30 ? trace_ds / sigma : 1.0;
    for (int r = 0; r < 3; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += sim.rotation[r * 3 + c] * mu_s[c];
        sim.translation[r] = mu_t[r] - sim.scale * acc;
    }
    return sim;
}

}  // namespace vp::metrics
