#pragma once

#include <cstdint>
#include <vector>

#include "vocapose/core/rng.hpp"
#include "vocapose/core/tensor.hpp"

namespace vp::motion {

// Shared quantization substrate for the motion codecs and the F0 codec:
// K entries tracked by EMA statistics, entries_k = ema_sum_k / (ema_count_k + eps).
struct Codebook {
    core::Tensor entries;           // [K, D]
    std::vector<double> ema_count;  // K
    core::Tensor ema_sum;           // [K, D]
    std::vector<int64_t> last_used; // per-code step index of last assignment

    Codebook() = default;
    Codebook(int64_t k, int64_t d);

    int64_t size() const { return entries.rank() == 2 ? entries.shape[0] : 0; }
    int64_t dim() const { return entries.rank() == 2 ? entries.shape[1] : 0; }

    void init_gaussian(core::Rng& rng, double scale = 1.0, double offset = 0.0);
    // Seed entries from rows of a data matrix (sampled with replacement).
    void init_from_data(const core::Tensor& data, core::Rng& rng);
};

struct QuantizeResult {
    int32_t index = 0;
    std::vector<double> code;
};

// Nearest codebook entry by L2 distance, ties broken toward the lowest index.
QuantizeResult quantize(const std::vector<double>& z, const Codebook& cb);

// Row-wise assignment of z [N, D] against the codebook.
std::vector<int32_t> quantize_rows(const core::Tensor& z, const Codebook& cb);

// Codebook rows for a list of assignments, as an [N, D] tensor.
core::Tensor lookup_rows(const Codebook& cb, const std::vector<int32_t>& idx);

// EMA update from one batch of latents and their assignments.
void ema_update(Codebook& cb, const core::Tensor& z, const std::vector<int32_t>& assign,
                double decay, double epsilon, int64_t step);

// Re-seed every code unused for `staleness` steps from a random batch latent.
// Returns how many codes were reset.
int64_t reset_stale_codes(Codebook& cb, const core::Tensor& z, int64_t step, int64_t staleness,
                          core::Rng& rng);

}  // namespace vp::motion
