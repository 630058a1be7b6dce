#pragma once

#include <string>
#include <vector>

#include "vocapose/core/tensor.hpp"

namespace vp::vocal {

struct KMeansModel {
    core::Tensor centroids;  // [K, F]
    std::vector<double> inertia_history;  // one value per Lloyd iteration, nonincreasing
    std::vector<std::string> log;         // empty-cluster reseeds etc.
};

// Lloyd's algorithm with k-means++ seeding. Needs at least K frames. Empty
// clusters are re-seeded from the point farthest from its assigned centroid.
KMeansModel fit_units(const core::Tensor& frames, int64_t k, int64_t iterations, uint64_t seed);

// Nearest centroid per frame, lowest-index ties.
std::vector<int32_t> assign_units(const core::Tensor& frames, const KMeansModel& model);

}  // namespace vp::vocal
