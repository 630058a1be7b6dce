#include "vocapose/lm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "vocapose/core/checkpoint.hpp"
#include "vocapose/core/rng.hpp"

namespace vp::lm {

using core::Rng;
using core::Tape;
using core::Tensor;
using core::Val;

namespace {
constexpr const char* kChars = " abcdefghijklmnopqrstuvwxyz0123456789'";
}

int32_t TextVocab::size() const { return 3 + static_cast<int32_t>(std::string(kChars).size()); }

std::string TextVocab::normalize(const std::string& lyric) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : lyric) {
        if (std::isspace(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<int32_t> TextVocab::encode(const std::string& lyric) const {
    const std::string norm = normalize(lyric);
    if (norm.empty()) throw std::invalid_argument("lyric is empty after normalization");
    const std::string chars = kChars;
    std::vector<int32_t> out;
    out.reserve(norm.size() + 2);
    out.push_back(kBos);
    for (char c : norm) {
        const size_t pos = chars.find(c);
        out.push_back(pos == std::string::npos ? kUnk : static_cast<int32_t>(3 + pos));
    }
    out.push_back(kEos);
    return out;
}

void LMConfig::validate() const {
    if (layers < 1 || heads < 1 || d_model < 1) throw std::invalid_argument("lm: sizes must be >= 1");
    if (d_model % heads != 0)
        throw std::invalid_argument("lm: d_model " + std::to_string(d_model) +
                                    " not divisible by heads " + std::to_string(heads));
    if (context_length < 8) throw std::invalid_argument("lm: context_length too small");
    if (batch_size < 1 || epochs < 1) throw std::invalid_argument("lm: batch/epochs must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("lm: learning_rate must be > 0");
}

nlohmann::json LMConfig::to_json() const {
    return {{"layers", layers},       {"heads", heads},
            {"d_model", d_model},     {"context_length", context_length},
            {"batch_size", batch_size}, {"epochs", epochs},
            {"learning_rate", learning_rate}, {"stop_loss", stop_loss}};
}

LMConfig LMConfig::from_json(const nlohmann::json& j) {
    LMConfig c;
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.d_model = j.value("d_model", c.d_model);
    c.context_length = j.value("context_length", c.context_length);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.stop_loss = j.value("stop_loss", c.stop_loss);
    c.validate();
    return c;
}

LMConfig LMConfig::paper_preset() {
    LMConfig c;
    c.layers = 12;
    c.heads = 8;
    c.d_model = 512;
    c.batch_size = 384;
    c.epochs = 100;
    c.learning_rate = 0.0002;
    return c;
}

void SamplerConfig::validate(int64_t vocab) const {
    if (top_k < 1 || top_k > vocab)
        throw std::invalid_argument("sampler: top_k must lie in [1, vocabulary size]");
    if (temperature <= 0.0) throw std::invalid_argument("sampler: temperature must be > 0");
}

TokenLM::TokenLM(LMConfig cfg, tokens::VocabLayout layout, uint64_t seed)
    : cfg_(cfg), layout_(layout) {
    cfg_.validate();
    Rng rng(seed);
    text_emb_ = std::make_unique<core::Embedding>("lm.text_emb", text_vocab_.size(), cfg_.d_model, rng);
    stream_emb_ =
        std::make_unique<core::Embedding>("lm.stream_emb", layout_.total(), cfg_.d_model, rng);
    pos_emb_ = std::make_unique<core::Embedding>("lm.pos_emb", cfg_.context_length, cfg_.d_model, rng);
    for (int64_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "lm.block" + std::to_string(l);
        blocks_.push_back(Block{core::LayerNorm(p + ".ln1", cfg_.d_model),
                                core::CausalSelfAttention(p + ".att", cfg_.d_model, cfg_.heads, rng),
                                core::LayerNorm(p + ".ln2", cfg_.d_model),
                                core::Dense(p + ".fc_in", cfg_.d_model, 4 * cfg_.d_model, rng),
                                core::Dense(p + ".fc_out", 4 * cfg_.d_model, cfg_.d_model, rng)});
    }
    ln_f_ = std::make_unique<core::LayerNorm>("lm.ln_f", cfg_.d_model);
    head_ = std::make_unique<core::Dense>("lm.head", cfg_.d_model, layout_.total(), rng);
    // zero-initialized output head: the untrained model is exactly uniform
    std::fill(head_->w.value.data.begin(), head_->w.value.data.end(), 0.0);
    std::fill(head_->b.value.data.begin(), head_->b.value.data.end(), 0.0);
}

core::ParamRefs TokenLM::params() {
    core::ParamRefs ps;
    text_emb_->params(ps);
    stream_emb_->params(ps);
    pos_emb_->params(ps);
    for (Block& b : blocks_) {
        b.ln1.params(ps);
        b.attention.params(ps);
        b.ln2.params(ps);
        b.fc_in.params(ps);
        b.fc_out.params(ps);
    }
    ln_f_->params(ps);
    head_->params(ps);
    return ps;
}

TextEncoding TokenLM::encode_text(const std::string& lyric) {
    TextEncoding enc;
    enc.tokens = text_vocab_.encode(lyric);
    Tape t;
    enc.h_l = t.value(text_emb_->forward(t, enc.tokens));
    return enc;
}

Val TokenLM::hidden_tape(Tape& t, const std::vector<int32_t>& text_tokens,
                         const std::vector<int32_t>& stream_tokens) {
    const int64_t total =
        static_cast<int64_t>(text_tokens.size()) + static_cast<int64_t>(stream_tokens.size());
    if (text_tokens.empty()) throw std::invalid_argument("lm: empty text prefix");
    if (total > cfg_.context_length)
        throw std::invalid_argument("lm: sequence of " + std::to_string(total) +
                                    " tokens exceeds context length " +
                                    std::to_string(cfg_.context_length));
    Val x;
    if (stream_tokens.empty()) {
        x = text_emb_->forward(t, text_tokens);
    } else {
        x = t.concat_rows(
            {text_emb_->forward(t, text_tokens), stream_emb_->forward(t, stream_tokens)});
    }
    std::vector<int32_t> pos_ids(static_cast<size_t>(total));
    for (int64_t i = 0; i < total; ++i) pos_ids[static_cast<size_t>(i)] = static_cast<int32_t>(i);
    x = t.add(x, pos_emb_->forward(t, pos_ids));
    for (Block& b : blocks_) {
        x = t.add(x, b.attention.forward(t, b.ln1.forward(t, x)));
        x = t.add(x, b.fc_out.forward(t, t.gelu(b.fc_in.forward(t, b.ln2.forward(t, x)))));
    }
    return ln_f_->forward(t, x);
}

double TokenLM::pair_loss_backward(const std::vector<int32_t>& text_tokens,
                                   const std::vector<int32_t>& stream, double weight) {
    if (stream.empty()) throw std::invalid_argument("lm: empty token stream");
    const int64_t nt = static_cast<int64_t>(text_tokens.size());
    const int64_t s = static_cast<int64_t>(stream.size());
    Tape t;
    Val h = hidden_tape(t, text_tokens, std::vector<int32_t>(stream.begin(), stream.end() - 1));
    Val rows = t.slice_rows(h, nt - 1, nt - 1 + s);
    Val logits = head_->forward(t, rows);
    Val loss = t.cross_entropy_mean(logits, stream);
    t.backward(t.scale(loss, weight));
    return t.value(loss).at(0);
}

double TokenLM::pair_loss(const std::vector<int32_t>& text_tokens,
                          const std::vector<int32_t>& stream) {
    if (stream.empty()) throw std::invalid_argument("lm: empty token stream");
    const int64_t nt = static_cast<int64_t>(text_tokens.size());
    const int64_t s = static_cast<int64_t>(stream.size());
    Tape t;
    Val h = hidden_tape(t, text_tokens, std::vector<int32_t>(stream.begin(), stream.end() - 1));
    Val rows = t.slice_rows(h, nt - 1, nt - 1 + s);
    Val logits = head_->forward(t, rows);
    return t.value(t.cross_entropy_mean(logits, stream)).at(0);
}

Tensor TokenLM::prefix_distributions(const std::vector<int32_t>& text_tokens,
                                     const std::vector<int32_t>& stream_prefix) {
    Tape t;
    Val h = hidden_tape(t, text_tokens, stream_prefix);
    return t.value(t.softmax_rows(head_->forward(t, h)));
}

// ---------------------------------------------------------------- inference

// Forward-only evaluator with per-layer KV caches; matches the tape path.
class InferenceSession {
public:
    explicit InferenceSession(TokenLM& m)
        : m_(m), d_(m.cfg_.d_model), heads_(m.cfg_.heads), dh_(d_ / heads_) {
        k_cache_.resize(static_cast<size_t>(m.cfg_.layers));
        v_cache_.resize(static_cast<size_t>(m.cfg_.layers));
    }

    int64_t position() const { return t_; }

    // Processes one token; returns the post-head logits row.
    std::vector<double> step(int32_t token, bool is_text) {
        if (t_ >= m_.cfg_.context_length)
            throw std::invalid_argument("lm: generation exceeded context length " +
                                        std::to_string(m_.cfg_.context_length));
        const Tensor& emb_table =
            is_text ? m_.text_emb_->table.value : m_.stream_emb_->table.value;
        std::vector<double> x(static_cast<size_t>(d_));
        for (int64_t j = 0; j < d_; ++j)
            x[static_cast<size_t>(j)] = emb_table.at(token, j) + m_.pos_emb_->table.value.at(t_, j);

        for (size_t l = 0; l < m_.blocks_.size(); ++l) {
            TokenLM::Block& b = m_.blocks_[l];
            std::vector<double> xh = layer_norm(x, b.ln1);
            std::vector<double> q = dense(xh, b.attention.wq);
            k_cache_[l].push_back(dense(xh, b.attention.wk));
            v_cache_[l].push_back(dense(xh, b.attention.wv));

            std::vector<double> ctx(static_cast<size_t>(d_), 0.0);
            const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh_));
            const int64_t cached = static_cast<int64_t>(k_cache_[l].size());
            std::vector<double> scores(static_cast<size_t>(cached));
            for (int64_t h = 0; h < heads_; ++h) {
                const int64_t off = h * dh_;
                double mx = -std::numeric_limits<double>::infinity();
                for (int64_t j = 0; j < cached; ++j) {
                    double dot = 0.0;
                    for (int64_t c = 0; c < dh_; ++c)
                        dot += q[static_cast<size_t>(off + c)] *
                               k_cache_[l][static_cast<size_t>(j)][static_cast<size_t>(off + c)];
                    scores[static_cast<size_t>(j)] = dot * inv_sqrt_dh;
                    mx = std::max(mx, scores[static_cast<size_t>(j)]);
                }
                double denom = 0.0;
                for (int64_t j = 0; j < cached; ++j) {
                    scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx);
                    denom += scores[static_cast<size_t>(j)];
                }
                const double invd = 1.0 / denom;
                for (int64_t j = 0; j < cached; ++j) {
                    const double p = scores[static_cast<size_t>(j)] * invd;
                    for (int64_t c = 0; c < dh_; ++c)
                        ctx[static_cast<size_t>(off + c)] +=
                            p * v_cache_[l][static_cast<size_t>(j)][static_cast<size_t>(off + c)];
                }
            }
            const std::vector<double> att_out = dense(ctx, b.attention.wo);
            for (int64_t j = 0; j < d_; ++j) x[static_cast<size_t>(j)] += att_out[static_cast<size_t>(j)];

            std::vector<double> mh = layer_norm(x, b.ln2);
            std::vector<double> inner = dense(mh, b.fc_in);
            for (double& v : inner) v = 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440));
            const std::vector<double> mlp_out = dense(inner, b.fc_out);
            for (int64_t j = 0; j < d_; ++j) x[static_cast<size_t>(j)] += mlp_out[static_cast<size_t>(j)];
        }
        ++t_;
        return dense(layer_norm(x, *m_.ln_f_), *m_.head_);
    }

private:
    std::vector<double> layer_norm(const std::vector<double>& x, core::LayerNorm& ln) const {
        const int64_t n = static_cast<int64_t>(x.size());
        double mu = 0.0;
        for (double v : x) mu += v;
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (double v : x) var += (v - mu) * (v - mu);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + ln.eps);
        std::vector<double> out(x.size());
        for (int64_t j = 0; j < n; ++j)
            out[static_cast<size_t>(j)] = ln.gamma.value.at(j) * (x[static_cast<size_t>(j)] - mu) * inv +
                                          ln.beta.value.at(j);
        return out;
    }

    std::vector<double> dense(const std::vector<double>& x, core::Dense& layer) const {
        const int64_t out_dim = layer.w.value.shape[0], in_dim = layer.w.value.shape[1];
        std::vector<double> out(static_cast<size_t>(out_dim));
        for (int64_t o = 0; o < out_dim; ++o) {
            double acc = 0.0;
            const double* row = layer.w.value.data.data() + o * in_dim;
            for (int64_t j = 0; j < in_dim; ++j) acc += x[static_cast<size_t>(j)] * row[j];
            out[static_cast<size_t>(o)] = acc + layer.b.value.at(o);
        }
        return out;
    }

    TokenLM& m_;
    int64_t d_, heads_, dh_;
    int64_t t_ = 0;
    std::vector<std::vector<std::vector<double>>> k_cache_, v_cache_;  // [layer][pos][d]
};

GenerateResult TokenLM::generate(const std::string& lyric, const SamplerConfig& sampler,
                                 int64_t max_tokens) {
    sampler.validate(layout_.total());
    if (max_tokens < 1) throw std::invalid_argument("lm: max_tokens must be >= 1");
    const std::vector<int32_t> text = text_vocab_.encode(lyric);
    Rng rng(sampler.seed);

    InferenceSession session(*this);
    std::vector<double> logits;
    for (int32_t tok : text) logits = session.step(tok, /*is_text=*/true);
    logits = session.step(tokens::VocabLayout::kStartVocal, /*is_text=*/false);

    GenerateResult result;
    result.stream.ids.push_back(tokens::VocabLayout::kStartVocal);
    const int64_t vocab = layout_.total();
    std::vector<int64_t> order(static_cast<size_t>(vocab));
    for (int64_t sampled = 0; sampled < max_tokens; ++sampled) {
        // keep the k largest logits (ties toward the lower id), temperature-
        // scale, renormalize, sample
        const int64_t k = std::min<int64_t>(sampler.top_k, vocab);
        for (int64_t i = 0; i < vocab; ++i) order[static_cast<size_t>(i)] = i;
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int64_t a, int64_t b) {
            if (logits[static_cast<size_t>(a)] != logits[static_cast<size_t>(b)])
                return logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(b)];
            return a < b;
        });
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < k; ++i)
            mx = std::max(mx, logits[static_cast<size_t>(order[static_cast<size_t>(i)])]);
        double denom = 0.0;
        std::vector<double> probs(static_cast<size_t>(k));
        for (int64_t i = 0; i < k; ++i) {
            const double scaled =
                (logits[static_cast<size_t>(order[static_cast<size_t>(i)])] - mx) / sampler.temperature;
            probs[static_cast<size_t>(i)] = std::exp(scaled);
            denom += probs[static_cast<size_t>(i)];
        }
        const double target = rng.uniform() * denom;
        double acc = 0.0;
        int32_t next = static_cast<int32_t>(order[static_cast<size_t>(k - 1)]);
        for (int64_t i = 0; i < k; ++i) {
            acc += probs[static_cast<size_t>(i)];
            if (target < acc) {
                next = static_cast<int32_t>(order[static_cast<size_t>(i)]);
                break;
            }
        }
        result.stream.ids.push_back(next);
        if (next == tokens::VocabLayout::kEnd) return result;
        if (session.position() >= cfg_.context_length) break;
        logits = session.step(next, /*is_text=*/false);
    }
    result.truncated = true;
    return result;
}

void TokenLM::save(const std::string& path, const SamplerConfig& default_sampler) const {
    core::Checkpoint ck;
    TokenLM* self = const_cast<TokenLM*>(this);
    for (core::Parameter* p : self->params()) ck.put(p->name, p->value);
    ck.meta["kind"] = "token_lm";
    ck.meta["config"] = cfg_.to_json();
    ck.meta["layout"] = layout_.to_json();
    ck.meta["sampler"] = {{"top_k", default_sampler.top_k},
                          {"temperature", default_sampler.temperature},
                          {"seed", default_sampler.seed}};
    ck.save(path);
}

TokenLM TokenLM::load(const std::string& path) {
    core::Checkpoint ck = core::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "token_lm")
        throw std::runtime_error(path + " is not a language model checkpoint");
    TokenLM model(LMConfig::from_json(ck.meta.at("config")),
                  tokens::VocabLayout::from_json(ck.meta.at("layout")), 0);
    ck.load_into(model.params());
    return model;
}

LMTrainCurve train_lm(TokenLM& model, const std::vector<TrainClip>& corpus, uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("train_lm: empty corpus");
    // reject malformed streams up front, reporting the clip
    std::vector<std::vector<int32_t>> texts;
    for (const TrainClip& clip : corpus) {
        try {
            tokens::DecoupleParams strict;
            strict.policy = tokens::DecouplePolicy::strict;
            (void)tokens::decouple(clip.stream, model.layout(), strict);
            texts.push_back(TextVocab().encode(clip.lyric));
        } catch (const std::exception& e) {
            throw std::invalid_argument("train_lm: clip '" + clip.clip_id + "' rejected: " + e.what());
        }
    }

    const LMConfig& cfg = model.config();
    core::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    core::Adam opt(adam);
    Rng rng(seed);

    LMTrainCurve curve;
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t i = 0;
        while (i < order.size()) {
            const size_t batch = std::min<size_t>(static_cast<size_t>(cfg.batch_size),
                                                  order.size() - i);
            for (size_t b = 0; b < batch; ++b, ++i) {
                const TrainClip& clip = corpus[order[i]];
                epoch_loss += model.pair_loss_backward(texts[order[i]], clip.stream.ids,
                                                       1.0 / static_cast<double>(batch));
            }
            opt.step(model.params());
        }
        curve.epoch_loss.push_back(epoch_loss / static_cast<double>(corpus.size()));
        if (cfg.stop_loss > 0.0 && curve.epoch_loss.back() < cfg.stop_loss) break;
    }
    return curve;
}

}  // namespace vp::lm
