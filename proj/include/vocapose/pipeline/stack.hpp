#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vocapose/lm/model.hpp"
#include "vocapose/metrics/metrics.hpp"
#include "vocapose/motion/codec.hpp"
#include "vocapose/pipeline/pipeline.hpp"
#include "vocapose/tokens/token_space.hpp"
#include "vocapose/vocal/tokenizer.hpp"

namespace vp::pipeline {

// Everything needed to train and run the full text -> (vocal + motion) stack
// on one dataset.
struct StackConfig {
    motion::CodecConfig codec;
    int64_t codec_steps = 300;
    int64_t codec_batch = 8;
    double codec_lr = 2e-3;

    vocal::VocalTokenizerConfig vocal;
    vocal::VocalTokenizer::FitBudget vocal_budget;

    lm::LMConfig lm;
    double lm_window_seconds = 0.0;  // truncate clips for the LM corpus; 0 = full length
    lm::SamplerConfig sampler;
    int64_t generate_max_tokens = 2048;
    int64_t samples_per_clip = 1;  // seeded independently; feeds FID/DIV

    uint64_t seed = 1;

    tokens::VocabLayout layout() const;

    // Scaled for the fixture determinism run: small codecs, small LM,
    // short LM windows.
    static StackConfig quick();
};

struct StackPaths {
    std::string dir;
    std::string codec(motion::Part p) const;
    std::string vocal() const;
    std::string lm() const;
    std::string layout() const;
    std::string train_streams() const;
    std::string generated() const;
    std::string report() const;
    std::string generation_csv() const;
    std::string reconstruction_csv() const;
};

struct LoadedClip {
    ClipManifest manifest;
    motion::MotionSequence motion;
    std::vector<double> audio;
};

std::vector<LoadedClip> load_clips(const std::vector<ClipManifest>& manifest,
                                   const std::string& split);

// Stage functions used by both the CLI and the one-call runner. All outputs
// are deterministic given the config seed.
void train_codecs_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                        const StackPaths& out);
void fit_vocal_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                     const StackPaths& out, const std::vector<std::string>& extra_singers = {});
std::vector<tokens::NamedStream> build_streams_stage(const std::vector<LoadedClip>& clips,
                                                     const StackConfig& cfg, const StackPaths& out,
                                                     bool write_files);
void train_lm_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                    const StackPaths& out);
void generate_stage(const std::vector<LoadedClip>& eval_clips, const StackConfig& cfg,
                    const StackPaths& out);
metrics::EvalReport evaluate_stage(const std::vector<LoadedClip>& eval_clips,
                                   const StackConfig& cfg, const StackPaths& out);

// dataset -> codecs -> vocal -> lm -> generate -> evaluate, writing all
// artifacts under out.dir.
metrics::EvalReport run_stack(const std::string& manifest_path, const StackConfig& cfg,
                              const StackPaths& out);

}  // namespace vp::pipeline
