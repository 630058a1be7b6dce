#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/core/checkpoint.hpp"
#include "vocapose/core/layers.hpp"
#include "vocapose/core/optimizer.hpp"
#include "vocapose/motion/codebook.hpp"
#include "vocapose/motion/types.hpp"

namespace vp::motion {

struct CodecConfig {
    int64_t codebook_size = 512;
    int64_t code_dim = 512;
    int64_t downsample = 4;  // power of two; one stride-2 stage per factor of 2
    double commitment_weight = 0.02;
    double ema_decay = 0.99;
    int64_t reset_staleness = 200;
    double ema_epsilon = 1e-5;
    int64_t window_length = 72;
    int64_t hidden = 128;

    void validate() const;
    nlohmann::json to_json() const;
    static CodecConfig from_json(const nlohmann::json& j);
};

// Strided conv1d encoder -> nearest-neighbor quantization against an
// EMA-maintained codebook -> mirrored transposed-conv decoder. Inputs are
// z-scored per dimension with stats fit on the training split.
class PartCodec {
public:
    PartCodec(std::string name, int64_t input_dim, CodecConfig cfg, uint64_t seed);

    // Per-dimension mean/std over all frames of the given windows.
    void fit_normalizer(const std::vector<core::Tensor>& windows);

    // [T, input_dim] -> ceil(T/downsample) token ids. Requires T >= downsample.
    std::vector<int32_t> encode_ids(const core::Tensor& motion_part);
    // Pre-quantization latents as rows, one per emitted token.
    core::Tensor encode_latents(const core::Tensor& motion_part);
    // ids -> [len(ids) * downsample, input_dim]
    core::Tensor decode_ids(const std::vector<int32_t>& ids);

    // Pre-quantization encoder latent, mean-pooled over time (the evaluation
    // feature extractor reuses this on the trained body codec).
    std::vector<double> pooled_latent(const core::Tensor& motion_part);

    struct StepStats {
        double loss = 0.0;
        double reconstruction = 0.0;
        double commitment = 0.0;
        int64_t resets = 0;
    };
    StepStats train_step(const std::vector<const core::Tensor*>& batch, core::Adam& opt,
                         core::Rng& rng, bool enable_reset = true);

    core::ParamRefs params();
    const CodecConfig& config() const { return cfg_; }
    int64_t input_dim() const { return input_dim_; }
    const std::string& name() const { return name_; }
    Codebook& codebook() { return codebook_; }
    const Codebook& codebook() const { return codebook_; }

    void save(const std::string& path) const;
    static PartCodec load(const std::string& path);

private:
    struct DownBlock {
        core::Conv1d down, res_a, res_b;
    };
    struct UpBlock {
        core::ConvTranspose1d up;
        core::Conv1d res_a, res_b;
    };

    core::Val encode_tape(core::Tape& t, const core::Tensor& x_cf);
    core::Val decode_tape(core::Tape& t, core::Val latent_cf);
    core::Tensor normalize_and_pad(const core::Tensor& x) const;  // -> channels-first [d, T']

    std::string name_;
    int64_t input_dim_;
    CodecConfig cfg_;
    int64_t stages_;

    std::unique_ptr<core::Conv1d> enc_in_, enc_out_, dec_in_, dec_out_;
    std::vector<DownBlock> down_;
    std::vector<UpBlock> up_;
    Codebook codebook_;
    core::Tensor norm_mean_, norm_std_;  // [input_dim]
    int64_t train_steps_done_ = 0;

    friend struct CodecIo;
};

struct TrainCurve {
    std::vector<double> loss;  // one point per step
    double smoothed(int64_t window, int64_t at) const;
};

// Trains a codec on motion windows (each [window_length, input_dim]).
// Rejects an empty dataset. Returns the per-step loss curve.
TrainCurve train_codec(PartCodec& codec, const std::vector<core::Tensor>& windows,
                       const core::AdamConfig& adam_cfg, int64_t steps, int64_t batch_size,
                       uint64_t seed, bool enable_reset = true);

// Cuts [window_length, d] windows from a part matrix, stride = window length.
std::vector<core::Tensor> cut_windows(const core::Tensor& part, int64_t window_length);

}  // namespace vp::motion
