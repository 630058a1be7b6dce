#include "vocapose/motion/codec.hpp"

#include <cmath>

namespace vp::motion {

using core::Rng;
using core::Tape;
using core::Tensor;
using core::Val;

void CodecConfig::validate() const {
    if (codebook_size < 1) throw std::invalid_argument("codec: codebook_size must be >= 1");
    if (code_dim < 1) throw std::invalid_argument("codec: code_dim must be >= 1");
    if (downsample < 1 || (downsample & (downsample - 1)) != 0)
        throw std::invalid_argument("codec: downsample must be a power of two, got " +
                                    std::to_string(downsample));
    if (commitment_weight <= 0.0) throw std::invalid_argument("codec: commitment_weight must be > 0");
    if (ema_decay <= 0.0 || ema_decay >= 1.0) throw std::invalid_argument("codec: ema_decay in (0,1)");
    if (window_length < downsample)
        throw std::invalid_argument("codec: window_length must be >= downsample");
    if (hidden < 1) throw std::invalid_argument("codec: hidden must be >= 1");
}

nlohmann::json CodecConfig::to_json() const {
    return {{"codebook_size", codebook_size}, {"code_dim", code_dim},     {"downsample", downsample},
            {"commitment_weight", commitment_weight}, {"ema_decay", ema_decay},
            {"reset_staleness", reset_staleness},     {"ema_epsilon", ema_epsilon},
            {"window_length", window_length},         {"hidden", hidden}};
}

CodecConfig CodecConfig::from_json(const nlohmann::json& j) {
    CodecConfig c;
    c.codebook_size = j.value("codebook_size", c.codebook_size);
    c.code_dim = j.value("code_dim", c.code_dim);
    c.downsample = j.value("downsample", c.downsample);
    c.commitment_weight = j.value("commitment_weight", c.commitment_weight);
    c.ema_decay = j.value("ema_decay", c.ema_decay);
    c.reset_staleness = j.value("reset_staleness", c.reset_staleness);
    c.ema_epsilon = j.value("ema_epsilon", c.ema_epsilon);
    c.window_length = j.value("window_length", c.window_length);
    c.hidden = j.value("hidden", c.hidden);
    c.validate();
    return c;
}

PartCodec::PartCodec(std::string name, int64_t input_dim, CodecConfig cfg, uint64_t seed)
    : name_(std::move(name)), input_dim_(input_dim), cfg_(cfg),
      codebook_(cfg.codebook_size, cfg.code_dim),
      norm_mean_(Tensor::zeros({input_dim})), norm_std_(Tensor::full({input_dim}, 1.0)) {
    cfg_.validate();
    if (input_dim < 1) throw std::invalid_argument("codec: input_dim must be >= 1");
    stages_ = 0;
    for (int64_t s = cfg_.downsample; s > 1; s /= 2) ++stages_;

    Rng rng(seed);
    const int64_t h = cfg_.hidden;
    enc_in_ = std::make_unique<core::Conv1d>(name_ + ".enc_in", input_dim, h, 3, 1, 1, rng);
    for (int64_t s = 0; s < stages_; ++s) {
        const std::string p = name_ + ".enc" + std::to_string(s);
        down_.push_back(DownBlock{core::Conv1d(p + ".down", h, h, 4, 2, 1, rng),
                                  core::Conv1d(p + ".res_a", h, h, 3, 1, 1, rng),
                                  core::Conv1d(p + ".res_b", h, h, 3, 1, 1, rng)});
    }
    enc_out_ = std::make_unique<core::Conv1d>(name_ + ".enc_out", h, cfg_.code_dim, 3, 1, 1, rng);
    dec_in_ = std::make_unique<core::Conv1d>(name_ + ".dec_in", cfg_.code_dim, h, 3, 1, 1, rng);
    for (int64_t s = 0; s < stages_; ++s) {
        const std::string p = name_ + ".dec" + std::to_string(s);
        up_.push_back(UpBlock{core::ConvTranspose1d(p + ".up", h, h, 2, 2, rng),
                              core::Conv1d(p + ".res_a", h, h, 3, 1, 1, rng),
                              core::Conv1d(p + ".res_b", h, h, 3, 1, 1, rng)});
    }
    dec_out_ = std::make_unique<core::Conv1d>(name_ + ".dec_out", h, input_dim, 3, 1, 1, rng);
    codebook_.init_gaussian(rng, 1.0);
}

core::ParamRefs PartCodec::params() {
    core::ParamRefs ps;
    enc_in_->params(ps);
    for (auto& b : down_) {
        b.down.params(ps);
        b.res_a.params(ps);
        b.res_b.params(ps);
    }
    enc_out_->params(ps);
    dec_in_->params(ps);
    for (auto& b : up_) {
        b.up.params(ps);
        b.res_a.params(ps);
        b.res_b.params(ps);
    }
    dec_out_->params(ps);
    return ps;
}

void PartCodec::fit_normalizer(const std::vector<Tensor>& windows) {
    if (windows.empty()) throw std::invalid_argument("fit_normalizer: no windows");
    std::vector<double> mean(static_cast<size_t>(input_dim_), 0.0);
    std::vector<double> sq(static_cast<size_t>(input_dim_), 0.0);
    int64_t total = 0;
    for (const Tensor& w : windows) {
        if (w.rank() != 2 || w.shape[1] != input_dim_)
            throw core::ShapeError("fit_normalizer", {-1, input_dim_}, w.shape);
        for (int64_t i = 0; i < w.shape[0]; ++i)
            for (int64_t j = 0; j < input_dim_; ++j) {
                mean[static_cast<size_t>(j)] += w.at(i, j);
                sq[static_cast<size_t>(j)] += w.at(i, j) * w.at(i, j);
            }
        total += w.shape[0];
    }
    for (int64_t j = 0; j < input_dim_; ++j) {
        const double m = mean[static_cast<size_t>(j)] / static_cast<double>(total);
        const double var = sq[static_cast<size_t>(j)] / static_cast<double>(total) - m * m;
        norm_mean_.at(j) = m;
        norm_std_.at(j) = std::sqrt(std::max(var, 0.0)) + 1e-6;
    }
}

Tensor PartCodec::normalize_and_pad(const Tensor& x) const {
    if (x.rank() != 2 || x.shape[1] != input_dim_)
        throw core::ShapeError(name_ + " codec input", {-1, input_dim_}, x.shape);
    core::check_finite(name_ + " codec input", x);
    const int64_t t = x.shape[0];
    const int64_t tp = (t + cfg_.downsample - 1) / cfg_.downsample * cfg_.downsample;
    Tensor cf({input_dim_, tp});
    for (int64_t i = 0; i < tp; ++i) {
        const int64_t src = std::min(i, t - 1);  // pad by repeating the last frame
        for (int64_t j = 0; j < input_dim_; ++j)
            cf.at(j, i) = (x.at(src, j) - norm_mean_.at(j)) / norm_std_.at(j);
    }
    return cf;
}

Val PartCodec::encode_tape(Tape& t, const Tensor& x_cf) {
    Val h = t.relu(enc_in_->forward(t, t.constant(x_cf)));
    for (auto& b : down_) {
        h = t.relu(b.down.forward(t, h));
        Val r = b.res_b.forward(t, t.relu(b.res_a.forward(t, h)));
        h = t.relu(t.add(h, r));
    }
    return enc_out_->forward(t, h);
}

Val PartCodec::decode_tape(Tape& t, Val latent_cf) {
    Val h = t.relu(dec_in_->forward(t, latent_cf));
    for (auto& b : up_) {
        h = t.relu(b.up.forward(t, h));
        Val r = b.res_b.forward(t, t.relu(b.res_a.forward(t, h)));
        h = t.relu(t.add(h, r));
    }
    return dec_out_->forward(t, h);
}

namespace {
// [d, L] channels-first -> [L, d] rows
Tensor to_rows(const Tensor& cf) {
    Tensor rows({cf.shape[1], cf.shape[0]});
    for (int64_t i = 0; i < cf.shape[0]; ++i)
        for (int64_t j = 0; j < cf.shape[1]; ++j) rows.at(j, i) = cf.at(i, j);
    return rows;
}
Tensor to_cf(const Tensor& rows) {
    Tensor cf({rows.shape[1], rows.shape[0]});
    for (int64_t i = 0; i < rows.shape[0]; ++i)
        for (int64_t j = 0; j < rows.shape[1]; ++j) cf.at(j, i) = rows.at(i, j);
    return cf;
}
}  // namespace

core::Tensor PartCodec::encode_latents(const Tensor& motion_part) {
    if (motion_part.rank() != 2 || motion_part.shape[0] < cfg_.downsample)
        throw std::invalid_argument(name_ + " codec encode: need at least " +
                                    std::to_string(cfg_.downsample) + " frames, got " +
                                    std::to_string(motion_part.rank() == 2 ? motion_part.shape[0] : 0));
    Tape t;
    Val latent = encode_tape(t, normalize_and_pad(motion_part));
    return to_rows(t.value(latent));
}

std::vector<int32_t> PartCodec::encode_ids(const Tensor& motion_part) {
    return quantize_rows(encode_latents(motion_part), codebook_);
}

Tensor PartCodec::decode_ids(const std::vector<int32_t>& ids) {
    if (ids.empty()) throw std::invalid_argument(name_ + " codec decode: empty token sequence");
    const Tensor codes = lookup_rows(codebook_, ids);  // validates ids, reports position
    Tape t;
    Val out = decode_tape(t, t.constant(to_cf(codes)));
    const Tensor& cf = t.value(out);
    Tensor rows({cf.shape[1], input_dim_});
    for (int64_t i = 0; i < input_dim_; ++i)
        for (int64_t j = 0; j < cf.shape[1]; ++j)
            rows.at(j, i) = cf.at(i, j) * norm_std_.at(i) + norm_mean_.at(i);
    return rows;
}

std::vector<double> PartCodec::pooled_latent(const Tensor& motion_part) {
    Tape t;
    Val latent = encode_tape(t, normalize_and_pad(motion_part));
    const Tensor& lv = t.value(latent);  // [code_dim, L]
    std::vector<double> pooled(static_cast<size_t>(cfg_.code_dim), 0.0);
    for (int64_t i = 0; i < lv.shape[0]; ++i) {
        double acc = 0.0;
        for (int64_t j = 0; j < lv.shape[1]; ++j) acc += lv.at(i, j);
        pooled[static_cast<size_t>(i)] = acc / static_cast<double>(lv.shape[1]);
    }
    return pooled;
}

PartCodec::StepStats PartCodec::train_step(const std::vector<const Tensor*>& batch, core::Adam& opt,
                                           Rng& rng, bool enable_reset) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    ++train_steps_done_;
    StepStats stats;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    std::vector<Tensor> all_latent_rows;
    std::vector<int32_t> all_assign;
    all_latent_rows.reserve(batch.size());

    for (const Tensor* xp : batch) {
        Tape t;
        const Tensor x_cf = normalize_and_pad(*xp);
        Val latent = encode_tape(t, x_cf);
        const Tensor latent_rows = to_rows(t.value(latent));
        std::vector<int32_t> assign = quantize_rows(latent_rows, codebook_);
        const Tensor codes_cf = to_cf(lookup_rows(codebook_, assign));

        Val dec_in_val = t.straight_through(latent, codes_cf);
        Val recon = decode_tape(t, dec_in_val);
        Val recon_loss = t.smooth_l1_mean(recon, t.constant(x_cf));
        Val commit = t.mse_mean(latent, t.constant(codes_cf));
        Val loss = t.add(recon_loss, t.scale(commit, cfg_.commitment_weight));
        t.backward(t.scale(loss, inv_b));

        stats.loss += t.value(loss).at(0) * inv_b;
        stats.reconstruction += t.value(recon_loss).at(0) * inv_b;
        stats.commitment += t.value(commit).at(0) * inv_b;

        all_latent_rows.push_back(latent_rows);
        all_assign.insert(all_assign.end(), assign.begin(), assign.end());
    }

    int64_t total_rows = 0;
    for (const Tensor& lr : all_latent_rows) total_rows += lr.shape[0];
    Tensor z({total_rows, cfg_.code_dim});
    int64_t off = 0;
    for (const Tensor& lr : all_latent_rows) {
        std::copy(lr.data.begin(), lr.data.end(), z.data.begin() + off * cfg_.code_dim);
        off += lr.shape[0];
    }
    ema_update(codebook_, z, all_assign, cfg_.ema_decay, cfg_.ema_epsilon, train_steps_done_);
    if (enable_reset)
        stats.resets = reset_stale_codes(codebook_, z, train_steps_done_, cfg_.reset_staleness, rng);

    opt.step(params());
    return stats;
}

void PartCodec::save(const std::string& path) const {
    core::Checkpoint ck;
    PartCodec* self = const_cast<PartCodec*>(this);
    for (core::Parameter* p : self->params()) ck.put(p->name, p->value);
    ck.put(name_ + ".codebook.entries", codebook_.entries);
    ck.put(name_ + ".codebook.ema_sum", codebook_.ema_sum);
    Tensor counts({static_cast<int64_t>(codebook_.ema_count.size())});
    counts.data = codebook_.ema_count;
    ck.put(name_ + ".codebook.ema_count", counts);
    ck.put(name_ + ".norm.mean", norm_mean_);
    ck.put(name_ + ".norm.std", norm_std_);
    ck.meta["kind"] = "motion_codec";
    ck.meta["name"] = name_;
    ck.meta["input_dim"] = input_dim_;
    ck.meta["train_steps_done"] = train_steps_done_;
    ck.meta["config"] = cfg_.to_json();
    ck.save(path);
}

PartCodec PartCodec::load(const std::string& path) {
    core::Checkpoint ck = core::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "motion_codec")
        throw std::runtime_error(path + " is not a motion codec checkpoint");
    const std::string name = ck.meta.at("name").get<std::string>();
    const int64_t input_dim = ck.meta.at("input_dim").get<int64_t>();
    CodecConfig cfg = CodecConfig::from_json(ck.meta.at("config"));
    PartCodec codec(name, input_dim, cfg, /*seed=*/0);
    ck.load_into(codec.params());
    codec.codebook_.entries = ck.get(name + ".codebook.entries");
    codec.codebook_.ema_sum = ck.get(name + ".codebook.ema_sum");
    codec.codebook_.ema_count = ck.get(name + ".codebook.ema_count").data;
    codec.norm_mean_ = ck.get(name + ".norm.mean");
    codec.norm_std_ = ck.get(name + ".norm.std");
    codec.train_steps_done_ = ck.meta.value("train_steps_done", int64_t{0});
    codec.codebook_.last_used.assign(static_cast<size_t>(cfg.codebook_size),
                                     codec.train_steps_done_);
    return codec;
}

double TrainCurve::smoothed(int64_t window, int64_t at) const {
    const int64_t n = static_cast<int64_t>(loss.size());
    if (n == 0) return 0.0;
    at = std::min(at, n - 1);
    const int64_t lo = std::max<int64_t>(0, at - window + 1);
    double acc = 0.0;
    for (int64_t i = lo; i <= at; ++i) acc += loss[static_cast<size_t>(i)];
    return acc / static_cast<double>(at - lo + 1);
}

TrainCurve train_codec(PartCodec& codec, const std::vector<Tensor>& windows,
                       const core::AdamConfig& adam_cfg, int64_t steps, int64_t batch_size,
                       uint64_t seed, bool enable_reset) {
    if (windows.empty()) throw std::invalid_argument("train_codec: empty dataset");
    if (steps < 1) throw std::invalid_argument("train_codec: budget must be >= 1 step");
    core::Adam opt(adam_cfg);
    Rng rng(seed);
    TrainCurve curve;
    curve.loss.reserve(static_cast<size_t>(steps));
    for (int64_t s = 0; s < steps; ++s) {
        std::vector<const Tensor*> batch;
        for (int64_t b = 0; b < batch_size; ++b)
            batch.push_back(&windows[static_cast<size_t>(rng.below(windows.size()))]);
        curve.loss.push_back(codec.train_step(batch, opt, rng, enable_reset).loss);
    }
    return curve;
}

std::vector<Tensor> cut_windows(const Tensor& part, int64_t window_length) {
    if (part.rank() != 2) throw core::ShapeError("cut_windows", "expected [T, d] matrix");
    std::vector<Tensor> out;
    for (int64_t start = 0; start + window_length <= part.shape[0]; start += window_length) {
        Tensor w({window_length, part.shape[1]});
        std::copy_n(part.data.begin() + start * part.shape[1], window_length * part.shape[1],
                    w.data.begin());
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace vp::motion
