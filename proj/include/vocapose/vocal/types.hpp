#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vocapose/core/tensor.hpp"

namespace vp::vocal {

// Frame-synchronous audio analysis. f0_hz[i] > 0 exactly when voiced[i].
struct VocalAnalysis {
    core::Tensor features;  // [frames, n_mels] log-mel energies
    std::vector<double> f0_hz;
    std::vector<bool> voiced;
    double hop_seconds = 0.0;
    int sample_rate = 0;

    int64_t num_frames() const { return features.rank() == 2 ? features.shape[0] : 0; }
};

struct UnitSeq {
    std::vector<int32_t> semantic_ids;  // [0, n_clusters)
    std::vector<int32_t> pitch_ids;     // [0, f0 codebook size)
};

struct SingerEmbedding {
    std::string singer_id;
    std::vector<double> vector;  // 256-d, trained globally
};

}  // namespace vp::vocal
