#pragma once

#include <string>
#include <vector>

#include "vocapose/metrics/metrics.hpp"
#include "vocapose/motion/codec.hpp"
#include "vocapose/motion/types.hpp"

namespace vp::motion {

struct AblationBudget {
    int64_t steps = 200;
    int64_t batch = 8;
    double learning_rate = 2e-3;
    uint64_t seed = 1;
};

struct AblationRow {
    std::string design;  // "K=256", "single", ...
    metrics::ReconstructionErrors errors;
};

// Codebook-size sweep plus the single-codebook variant: every variant trains
// under the identical budget on the same data, then reconstructs the eval
// sequences. "single" quantizes all 259 pose columns through one codec
// instead of the three part codecs.
std::vector<AblationRow> ablate_single_vs_split(const std::vector<MotionSequence>& train,
                                                const std::vector<MotionSequence>& eval,
                                                const CodecConfig& base,
                                                const std::vector<int64_t>& codebook_sizes,
                                                const AblationBudget& budget);

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

}  // namespace vp::motion
