#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/core/layers.hpp"
#include "vocapose/core/optimizer.hpp"
#include "vocapose/tokens/token_space.hpp"

namespace vp::lm {

// Fixed character vocabulary of the lyric encoder: 0 BOS, 1 EOS, 2 UNK, then
// the normalized character set. Lyrics are lowercased with whitespace
// collapsed before lookup.
class TextVocab {
public:
    static constexpr int32_t kBos = 0;
    static constexpr int32_t kEos = 1;
    static constexpr int32_t kUnk = 2;

    int32_t size() const;
    // BOS + ids of the normalized lyric + EOS. Rejects lyrics that normalize
    // to nothing.
    std::vector<int32_t> encode(const std::string& lyric) const;
    static std::string normalize(const std::string& lyric);
};

struct TextEncoding {
    std::vector<int32_t> tokens;  // char ids, boundary marks included
    core::Tensor h_l;             // [tokens, d_model] encoder rows
};

struct LMConfig {
    int64_t layers = 4;
    int64_t heads = 4;
    int64_t d_model = 128;
    int64_t context_length = 1024;
    int64_t batch_size = 16;
    int64_t epochs = 200;
    double learning_rate = 0.002;
    double stop_loss = 0.0;  // stop once the epoch loss drops below (0 = off)

    void validate() const;
    nlohmann::json to_json() const;
    static LMConfig from_json(const nlohmann::json& j);
    // Full-scale settings (12 layers, 8 heads at batch 384 for 100 epochs,
    // lr 2e-4); width is not dictated anywhere, 512 is this preset's choice.
    static LMConfig paper_preset();
};

struct SamplerConfig {
    int64_t top_k = 1;
    double temperature = 1.0;
    uint64_t seed = 0;

    void validate(int64_t vocab) const;
};

struct GenerateResult {
    tokens::TokenStream stream;
    bool truncated = false;  // max_tokens hit before the end token
};

// Decoder-only transformer over the unified vocabulary, text-conditioned by
// prepending the character encoding as prefix context.
class TokenLM {
public:
    TokenLM(LMConfig cfg, tokens::VocabLayout layout, uint64_t seed);

    TextEncoding encode_text(const std::string& lyric);

    // Teacher-forced loss (nats/token) over the stream positions of one
    // (lyric, mixed stream) pair; accumulates gradients scaled by weight.
    double pair_loss_backward(const std::vector<int32_t>& text_tokens,
                              const std::vector<int32_t>& stream, double weight);
    double pair_loss(const std::vector<int32_t>& text_tokens, const std::vector<int32_t>& stream);

    // Per-position distributions over the vocabulary (softmax rows) for a
    // stream prefix; row i conditions on the text and tokens < i.
    core::Tensor prefix_distributions(const std::vector<int32_t>& text_tokens,
                                      const std::vector<int32_t>& stream_prefix);

    GenerateResult generate(const std::string& lyric, const SamplerConfig& sampler,
                            int64_t max_tokens);

    core::ParamRefs params();
    const LMConfig& config() const { return cfg_; }
    const tokens::VocabLayout& layout() const { return layout_; }

    void save(const std::string& path, const SamplerConfig& default_sampler = {}) const;
    static TokenLM load(const std::string& path);

private:
    struct Block {
        core::LayerNorm ln1;
        core::CausalSelfAttention attention;
        core::LayerNorm ln2;
        core::Dense fc_in, fc_out;
    };

    core::Val hidden_tape(core::Tape& t, const std::vector<int32_t>& text_tokens,
                          const std::vector<int32_t>& stream_tokens);

    LMConfig cfg_;
    tokens::VocabLayout layout_;
    TextVocab text_vocab_;
    std::unique_ptr<core::Embedding> text_emb_, stream_emb_, pos_emb_;
    std::vector<Block> blocks_;
    std::unique_ptr<core::LayerNorm> ln_f_;
    std::unique_ptr<core::Dense> head_;

    friend class InferenceSession;
};

struct TrainClip {
    std::string clip_id;
    std::string lyric;
    tokens::TokenStream stream;
};

struct LMTrainCurve {
    std::vector<double> epoch_loss;  // mean nats/token per epoch
};

// Validates every stream (strict decouple; clip id reported on failure),
// then teacher-forces for cfg.epochs with Adam (beta1 0.9, beta2 0.99).
LMTrainCurve train_lm(TokenLM& model, const std::vector<TrainClip>& corpus, uint64_t seed);

}  // namespace vp::lm
