#include "vocapose/vocal/f0_codec.hpp"

#include <algorithm>
#include <cmath>

#include "vocapose/core/checkpoint.hpp"

namespace vp::vocal {

using core::Rng;
using core::Tape;
using core::Tensor;
using core::Val;

void F0CodecConfig::validate() const {
    if (codebook_size < 1 || code_dim < 1 || hidden < 1)
        throw std::invalid_argument("f0 codec: sizes must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("f0 codec: kernel must be odd, got " + std::to_string(kernel));
    if (singer_dim < 1) throw std::invalid_argument("f0 codec: singer_dim must be >= 1");
    if (commitment_weight <= 0.0) throw std::invalid_argument("f0 codec: commitment_weight > 0");
    if (log_scale <= 0.0) throw std::invalid_argument("f0 codec: log_scale > 0");
}

nlohmann::json F0CodecConfig::to_json() const {
    return {{"codebook_size", codebook_size}, {"code_dim", code_dim},
            {"hidden", hidden},               {"kernel", kernel},
            {"singer_dim", singer_dim},       {"commitment_weight", commitment_weight},
            {"ema_decay", ema_decay},         {"reset_staleness", reset_staleness},
            {"ema_epsilon", ema_epsilon},     {"log_center", log_center},
            {"log_scale", log_scale}};
}

F0CodecConfig F0CodecConfig::from_json(const nlohmann::json& j) {
    F0CodecConfig c;
    c.codebook_size = j.value("codebook_size", c.codebook_size);
    c.code_dim = j.value("code_dim", c.code_dim);
    c.hidden = j.value("hidden", c.hidden);
    c.kernel = j.value("kernel", c.kernel);
    c.singer_dim = j.value("singer_dim", c.singer_dim);
    c.commitment_weight = j.value("commitment_weight", c.commitment_weight);
    c.ema_decay = j.value("ema_decay", c.ema_decay);
    c.reset_staleness = j.value("reset_staleness", c.reset_staleness);
    c.ema_epsilon = j.value("ema_epsilon", c.ema_epsilon);
    c.log_center = j.value("log_center", c.log_center);
    c.log_scale = j.value("log_scale", c.log_scale);
    c.validate();
    return c;
}

F0Codec::F0Codec(F0CodecConfig cfg, std::vector<std::string> singer_ids, uint64_t seed)
    : cfg_(cfg), singer_ids_(std::move(singer_ids)),
      codebook_(cfg.codebook_size, cfg.code_dim) {
    cfg_.validate();
    if (singer_ids_.empty()) throw std::invalid_argument("f0 codec: needs at least one singer");
    Rng rng(seed);
    const int64_t pad = cfg_.kernel / 2;
    singer_table_ = std::make_unique<core::Embedding>("f0.singers",
                                                      static_cast<int64_t>(singer_ids_.size()),
                                                      cfg_.singer_dim, rng);
    enc_a_ = std::make_unique<core::Conv1d>("f0.enc_a", 1 + cfg_.singer_dim, cfg_.hidden,
                                            cfg_.kernel, 1, pad, rng);
    enc_b_ = std::make_unique<core::Conv1d>("f0.enc_b", cfg_.hidden, cfg_.code_dim, cfg_.kernel, 1,
                                            pad, rng);
    dec_a_ = std::make_unique<core::Conv1d>("f0.dec_a", cfg_.code_dim + cfg_.singer_dim,
                                            cfg_.hidden, cfg_.kernel, 1, pad, rng);
    dec_b_ = std::make_unique<core::Conv1d>("f0.dec_b", cfg_.hidden, 1, cfg_.kernel, 1, pad, rng);
    codebook_.init_gaussian(rng, 1.0);
}

core::ParamRefs F0Codec::params() {
    core::ParamRefs ps;
    singer_table_->params(ps);
    enc_a_->params(ps);
    enc_b_->params(ps);
    dec_a_->params(ps);
    dec_b_->params(ps);
    return ps;
}

int64_t F0Codec::singer_index(const std::string& singer) const {
    for (size_t i = 0; i < singer_ids_.size(); ++i)
        if (singer_ids_[i] == singer) return static_cast<int64_t>(i);
    throw std::invalid_argument("unknown singer '" + singer + "'");
}

SingerEmbedding F0Codec::singer_embedding(const std::string& singer) const {
    const int64_t idx = singer_index(singer);
    SingerEmbedding e;
    e.singer_id = singer;
    const Tensor& table = singer_table_->table.value;
    e.vector.assign(table.data.begin() + idx * cfg_.singer_dim,
                    table.data.begin() + (idx + 1) * cfg_.singer_dim);
    return e;
}

std::vector<double> F0Codec::interpolate_log_contour(const std::vector<double>& f0_hz,
                                                     const std::vector<bool>& voiced,
                                                     double fallback_log_hz) {
    if (f0_hz.size() != voiced.size())
        throw std::invalid_argument("f0 contour: f0/voiced length mismatch");
    const int64_t n = static_cast<int64_t>(f0_hz.size());
    std::vector<double> out(static_cast<size_t>(n), fallback_log_hz);
    int64_t prev = -1;
    for (int64_t i = 0; i < n; ++i) {
        if (!voiced[static_cast<size_t>(i)]) continue;
        if (f0_hz[static_cast<size_t>(i)] <= 0.0)
            throw std::invalid_argument("f0 contour: voiced frame with nonpositive f0");
        const double v = std::log(f0_hz[static_cast<size_t>(i)]);
        out[static_cast<size_t>(i)] = v;
        if (prev < 0) {
            for (int64_t j = 0; j < i; ++j) out[static_cast<size_t>(j)] = v;  // extend left edge
        } else {
            const double pv = out[static_cast<size_t>(prev)];
            for (int64_t j = prev + 1; j < i; ++j) {
                const double w = static_cast<double>(j - prev) / static_cast<double>(i - prev);
                out[static_cast<size_t>(j)] = pv + w * (v - pv);
            }
        }
        prev = i;
    }
    if (prev < 0) return out;  // all unvoiced
    for (int64_t j = prev + 1; j < n; ++j) out[static_cast<size_t>(j)] = out[static_cast<size_t>(prev)];
    return out;
}

Val F0Codec::encode_tape(Tape& t, const std::vector<double>& contour_norm, int64_t singer_idx) {
    const int64_t frames = static_cast<int64_t>(contour_norm.size());
    Tensor contour({1, frames});
    std::copy(contour_norm.begin(), contour_norm.end(), contour.data.begin());
    Val emb = singer_table_->forward(t, {static_cast<int32_t>(singer_idx)});  // [1, singer_dim]
    Val emb_cols = t.tile_cols(t.transpose(emb), frames);                     // [singer_dim, frames]
    Val input = t.concat_rows({t.constant(contour), emb_cols});
    Val h = t.relu(enc_a_->forward(t, input));
    return enc_b_->forward(t, h);  // [code_dim, frames]
}

Val F0Codec::decode_tape(Tape& t, Val codes_cf, int64_t singer_idx, int64_t frames) {
    Val emb = singer_table_->forward(t, {static_cast<int32_t>(singer_idx)});
    Val emb_cols = t.tile_cols(t.transpose(emb), frames);
    Val input = t.concat_rows({codes_cf, emb_cols});
    Val h = t.relu(dec_a_->forward(t, input));
    return dec_b_->forward(t, h);  // [1, frames] normalized log-f0
}

namespace {
Tensor rows_from_cf(const Tensor& cf) {
    Tensor rows({cf.shape[1], cf.shape[0]});
    for (int64_t i = 0; i < cf.shape[0]; ++i)
        for (int64_t j = 0; j < cf.shape[1]; ++j) rows.at(j, i) = cf.at(i, j);
    return rows;
}
Tensor cf_from_rows(const Tensor& rows) {
    Tensor cf({rows.shape[1], rows.shape[0]});
    for (int64_t i = 0; i < rows.shape[0]; ++i)
        for (int64_t j = 0; j < rows.shape[1]; ++j) cf.at(j, i) = rows.at(i, j);
    return cf;
}
}  // namespace

std::vector<int32_t> F0Codec::encode_pitch(const std::vector<double>& f0_hz,
                                           const std::vector<bool>& voiced,
                                           const std::string& singer) {
    const int64_t idx = singer_index(singer);
    if (f0_hz.empty()) throw std::invalid_argument("encode_pitch: empty track");
    std::vector<double> contour = interpolate_log_contour(f0_hz, voiced, cfg_.log_center);
    for (double& v : contour) v = (v - cfg_.log_center) / cfg_.log_scale;
    Tape t;
    Val latent = encode_tape(t, contour, idx);
    return quantize_rows(rows_from_cf(t.value(latent)), codebook_);
}

std::vector<double> F0Codec::decode_pitch(const std::vector<int32_t>& pitch_ids,
                                          const std::string& singer) {
    const int64_t idx = singer_index(singer);
    if (pitch_ids.empty()) throw std::invalid_argument("decode_pitch: empty id sequence");
    const Tensor codes = lookup_rows(codebook_, pitch_ids);
    Tape t;
    Val out = decode_tape(t, t.constant(cf_from_rows(codes)), idx,
                          static_cast<int64_t>(pitch_ids.size()));
    const Tensor& norm = t.value(out);
    std::vector<double> f0(static_cast<size_t>(pitch_ids.size()));
    for (size_t i = 0; i < f0.size(); ++i)
        f0[i] = std::exp(norm.at(0, static_cast<int64_t>(i)) * cfg_.log_scale + cfg_.log_center);
    return f0;
}

F0Codec::StepStats F0Codec::train_step(const std::vector<const F0Sample*>& batch, core::Adam& opt,
                                       Rng& rng, bool enable_reset) {
    if (batch.empty()) throw std::invalid_argument("f0 train_step: empty batch");
    ++train_steps_done_;
    StepStats stats;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    std::vector<Tensor> latents;
    std::vector<int32_t> assigns;
    for (const F0Sample* sample : batch) {
        const int64_t idx = singer_index(sample->singer_id);
        std::vector<double> contour = interpolate_log_contour(sample->f0_hz, sample->voiced,
                                                               cfg_.log_center);
        for (double& v : contour) v = (v - cfg_.log_center) / cfg_.log_scale;
        const int64_t frames = static_cast<int64_t>(contour.size());

        Tape t;
        Val latent = encode_tape(t, contour, idx);
        const Tensor latent_rows = rows_from_cf(t.value(latent));
        std::vector<int32_t> assign = quantize_rows(latent_rows, codebook_);
        const Tensor codes_cf = cf_from_rows(lookup_rows(codebook_, assign));

        Val dec_in = t.straight_through(latent, codes_cf);
        Val recon = decode_tape(t, dec_in, idx, frames);
        Tensor target({1, frames});
        std::copy(contour.begin(), contour.end(), target.data.begin());
        Val recon_loss = t.mse_mean(recon, t.constant(target));
        Val commit = t.mse_mean(latent, t.constant(codes_cf));
        Val loss = t.add(recon_loss, t.scale(commit, cfg_.commitment_weight));
        t.backward(t.scale(loss, inv_b));

        stats.loss += t.value(loss).at(0) * inv_b;
        stats.reconstruction += t.value(recon_loss).at(0) * inv_b;
        stats.commitment += t.value(commit).at(0) * inv_b;
        latents.push_back(latent_rows);
        assigns.insert(assigns.end(), assign.begin(), assign.end());
    }

    int64_t total = 0;
    for (const Tensor& l : latents) total += l.shape[0];
    Tensor z({total, cfg_.code_dim});
    int64_t off = 0;
    for (const Tensor& l : latents) {
        std::copy(l.data.begin(), l.data.end(), z.data.begin() + off * cfg_.code_dim);
        off += l.shape[0];
    }
    ema_update(codebook_, z, assigns, cfg_.ema_decay, cfg_.ema_epsilon, train_steps_done_);
    if (enable_reset) reset_stale_codes(codebook_, z, train_steps_done_, cfg_.reset_staleness, rng);
    opt.step(params());
    return stats;
}

void F0Codec::save(const std::string& path) const {
    core::Checkpoint ck;
    F0Codec* self = const_cast<F0Codec*>(this);
    for (core::Parameter* p : self->params()) ck.put(p->name, p->value);
    ck.put("f0.codebook.entries", codebook_.entries);
    ck.put("f0.codebook.ema_sum", codebook_.ema_sum);
    Tensor counts({static_cast<int64_t>(codebook_.ema_count.size())});
    counts.data = codebook_.ema_count;
    ck.put("f0.codebook.ema_count", counts);
    ck.meta["kind"] = "f0_codec";
    ck.meta["config"] = cfg_.to_json();
    ck.meta["singers"] = singer_ids_;
    ck.meta["train_steps_done"] = train_steps_done_;
    ck.save(path);
}

F0Codec F0Codec::load(const std::string& path) {
    core::Checkpoint ck = core::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "f0_codec")
        throw std::runtime_error(path + " is not an f0 codec checkpoint");
    F0Codec codec(F0CodecConfig::from_json(ck.meta.at("config")),
                  ck.meta.at("singers").get<std::vector<std::string>>(), 0);
    ck.load_into(codec.params());
    codec.codebook_.entries = ck.get("f0.codebook.entries");
    codec.codebook_.ema_sum = ck.get("f0.codebook.ema_sum");
    codec.codebook_.ema_count = ck.get("f0.codebook.ema_count").data;
    codec.train_steps_done_ = ck.meta.value("train_steps_done", int64_t{0});
    codec.codebook_.last_used.assign(static_cast<size_t>(codec.cfg_.codebook_size),
                                     codec.train_steps_done_);
    return codec;
}

F0TrainCurve train_f0_vq(F0Codec& codec, const std::vector<F0Sample>& corpus,
                         const core::AdamConfig& adam_cfg, int64_t steps, int64_t batch_size,
                         uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("train_f0_vq: empty corpus");
    if (steps < 1) throw std::invalid_argument("train_f0_vq: budget must be >= 1");
    core::Adam opt(adam_cfg);
    Rng rng(seed);
    F0TrainCurve curve;
    for (int64_t s = 0; s < steps; ++s) {
        std::vector<const F0Sample*> batch;
        for (int64_t b = 0; b < batch_size; ++b)
            batch.push_back(&corpus[static_cast<size_t>(rng.below(corpus.size()))]);
        curve.loss.push_back(codec.train_step(batch, opt, rng).loss);
    }
    return curve;
}

}  // namespace vp::vocal
