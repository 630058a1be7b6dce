#include "vocapose/vocal/kmeans.hpp"

#include <cmath>
#include <limits>

#include "vocapose/core/kernels.hpp"
#include "vocapose/core/rng.hpp"

namespace vp::vocal {

using core::Tensor;

namespace {
double sq_dist(const Tensor& a, int64_t row_a, const Tensor& b, int64_t row_b, int64_t f) {
    double d2 = 0.0;
    for (int64_t j = 0; j < f; ++j) {
        const double d = a.at(row_a, j) - b.at(row_b, j);
        d2 += d * d;
    }
    return d2;
}
}  // namespace

KMeansModel fit_units(const Tensor& frames, int64_t k, int64_t iterations, uint64_t seed) {
    if (frames.rank() != 2) throw core::ShapeError("fit_units", "expected [N, F] frame matrix");
    const int64_t n = frames.shape[0], f = frames.shape[1];
    if (n < k)
        throw std::invalid_argument("fit_units: " + std::to_string(n) + " frames is fewer than k=" +
                                    std::to_string(k));
    if (k < 1 || iterations < 1) throw std::invalid_argument("fit_units: k and iterations must be >= 1");
    core::check_finite("fit_units", frames);

    core::Rng rng(seed);
    KMeansModel model;
    model.centroids = Tensor({k, f});

    // k-means++ seeding
    std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    {
        const int64_t first = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
        for (int64_t j = 0; j < f; ++j) model.centroids.at(0, j) = frames.at(first, j);
        for (int64_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                min_d2[static_cast<size_t>(i)] = std::min(
                    min_d2[static_cast<size_t>(i)], sq_dist(frames, i, model.centroids, c - 1, f));
                total += min_d2[static_cast<size_t>(i)];
            }
            int64_t pick = n - 1;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                for (int64_t i = 0; i < n; ++i) {
                    acc += min_d2[static_cast<size_t>(i)];
                    if (target < acc) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
            }
            for (int64_t j = 0; j < f; ++j) model.centroids.at(c, j) = frames.at(pick, j);
        }
    }

    std::vector<int32_t> assign(static_cast<size_t>(n));
    for (int64_t it = 0; it < iterations; ++it) {
        core::kernels::nearest_code(frames.data.data(), model.centroids.data.data(), assign.data(),
                                    n, k, f);
        double inertia = 0.0;
        for (int64_t i = 0; i < n; ++i)
            inertia += sq_dist(frames, i, model.centroids, assign[static_cast<size_t>(i)], f);
        model.inertia_history.push_back(inertia);

        Tensor sums({k, f});
        std::vector<int64_t> counts(static_cast<size_t>(k), 0);
        for (int64_t i = 0; i < n; ++i) {
            const int32_t a = assign[static_cast<size_t>(i)];
            ++counts[static_cast<size_t>(a)];
            for (int64_t j = 0; j < f; ++j) sums.at(a, j) += frames.at(i, j);
        }
        for (int64_t c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                for (int64_t j = 0; j < f; ++j)
                    model.centroids.at(c, j) =
                        sums.at(c, j) / static_cast<double>(counts[static_cast<size_t>(c)]);
            } else {
                // farthest point from its assigned centroid takes over the empty cluster
                int64_t far_i = 0;
                double far_d = -1.0;
                for (int64_t i = 0; i < n; ++i) {
                    const double d =
                        sq_dist(frames, i, model.centroids, assign[static_cast<size_t>(i)], f);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                for (int64_t j = 0; j < f; ++j) model.centroids.at(c, j) = frames.at(far_i, j);
                model.log.push_back("iteration " + std::to_string(it) + ": empty cluster " +
                                    std::to_string(c) + " re-seeded from frame " +
                                    std::to_string(far_i));
            }
        }
    }
    return model;
}

std::vector<int32_t> assign_units(const Tensor& frames, const KMeansModel& model) {
    if (frames.rank() != 2 || frames.shape[1] != model.centroids.shape[1])
        throw core::ShapeError("assign_units", {-1, model.centroids.shape[1]}, frames.shape);
    std::vector<int32_t> assign(static_cast<size_t>(frames.shape[0]));
    core::kernels::nearest_code(frames.data.data(), model.centroids.data.data(), assign.data(),
                                frames.shape[0], model.centroids.shape[0], frames.shape[1]);
    return assign;
}

}  // namespace vp::vocal
