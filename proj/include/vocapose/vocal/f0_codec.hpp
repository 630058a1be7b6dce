#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/core/layers.hpp"
#include "vocapose/core/optimizer.hpp"
#include "vocapose/motion/codebook.hpp"
#include "vocapose/vocal/types.hpp"

namespace vp::vocal {

struct F0CodecConfig {
    int64_t codebook_size = 20;
    int64_t code_dim = 8;
    int64_t hidden = 32;
    int64_t kernel = 9;  // windowed convolution span in frames
    int64_t singer_dim = 256;
    double commitment_weight = 0.02;
    double ema_decay = 0.99;
    int64_t reset_staleness = 200;
    double ema_epsilon = 1e-5;
    // fixed transform of the contour: (ln f0 - log_center) / log_scale
    double log_center = 5.2983173665480363;  // ln 200
    double log_scale = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static F0CodecConfig from_json(const nlohmann::json& j);
};

struct F0Sample {
    std::vector<double> f0_hz;
    std::vector<bool> voiced;
    std::string singer_id;
};

// Windowed conv encoder over (interpolated log-F0 contour + broadcast singer
// embedding) -> 20-entry EMA codebook -> conv decoder back to a contour.
// Unvoiced frames ride on the interpolated contour; callers gate the decoded
// track to 0 with the voicing flags.
class F0Codec {
public:
    F0Codec(F0CodecConfig cfg, std::vector<std::string> singer_ids, uint64_t seed);

    // Linear interpolation of ln(f0) across unvoiced gaps, flat extension at
    // the edges; all-unvoiced tracks sit at fallback_log_hz.
    static std::vector<double> interpolate_log_contour(const std::vector<double>& f0_hz,
                                                       const std::vector<bool>& voiced,
                                                       double fallback_log_hz = 5.2983173665480363);

    std::vector<int32_t> encode_pitch(const std::vector<double>& f0_hz,
                                      const std::vector<bool>& voiced, const std::string& singer);
    // Decoded contour in Hz, one value per pitch id (not voicing-gated).
    std::vector<double> decode_pitch(const std::vector<int32_t>& pitch_ids,
                                     const std::string& singer);

    struct StepStats {
        double loss = 0.0;
        double reconstruction = 0.0;
        double commitment = 0.0;
    };
    StepStats train_step(const std::vector<const F0Sample*>& batch, core::Adam& opt, core::Rng& rng,
                         bool enable_reset = true);

    SingerEmbedding singer_embedding(const std::string& singer) const;
    const std::vector<std::string>& singers() const { return singer_ids_; }
    const F0CodecConfig& config() const { return cfg_; }
    motion::Codebook& codebook() { return codebook_; }

    core::ParamRefs params();
    void save(const std::string& path) const;
    static F0Codec load(const std::string& path);

private:
    int64_t singer_index(const std::string& singer) const;
    core::Val encode_tape(core::Tape& t, const std::vector<double>& contour_norm, int64_t singer_idx);
    core::Val decode_tape(core::Tape& t, core::Val codes_cf, int64_t singer_idx, int64_t frames);

    F0CodecConfig cfg_;
    std::vector<std::string> singer_ids_;
    std::unique_ptr<core::Embedding> singer_table_;
    std::unique_ptr<core::Conv1d> enc_a_, enc_b_, dec_a_, dec_b_;
    motion::Codebook codebook_;
    int64_t train_steps_done_ = 0;
};

struct F0TrainCurve {
    std::vector<double> loss;
};

F0TrainCurve train_f0_vq(F0Codec& codec, const std::vector<F0Sample>& corpus,
                         const core::AdamConfig& adam_cfg, int64_t steps, int64_t batch_size,
                         uint64_t seed);

}  // namespace vp::vocal
