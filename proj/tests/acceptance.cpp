// Acceptance suite: ten criteria, one PASS/FAIL line each, exit 0 only when
// all pass. Budgets are desk-scale; every tolerance is pinned in code here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "vocapose/core/layers.hpp"
#include "vocapose/core/rng.hpp"
#include "vocapose/lm/model.hpp"
#include "vocapose/metrics/linalg.hpp"
#include "vocapose/metrics/metrics.hpp"
#include "vocapose/motion/codec.hpp"
#include "vocapose/pipeline/fixture.hpp"
#include "vocapose/pipeline/stack.hpp"
#include "vocapose/tokens/token_space.hpp"
#include "vocapose/vocal/f0_codec.hpp"
#include "vocapose/vocal/features.hpp"

using namespace vp;
using core::Rng;
using core::Tensor;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<std::string()> run;  // returns "" on pass, reason on fail
};

std::string fail(const std::string& why) { return why; }

// ------------------------------------------------------------ criterion 1

std::string criterion_gradients() {
    double worst = 0.0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const int64_t n = 2 + static_cast<int64_t>(rng.below(3));
        const int64_t din = 2 + static_cast<int64_t>(rng.below(4));
        const int64_t dout = 2 + static_cast<int64_t>(rng.below(4));
        auto track = [&](const vp::test::GradCheckResult& r) { worst = std::max(worst, r.max_rel_err); };

        Tensor x({n, din});
        for (double& v : x.data) v = rng.gaussian();
        {
            core::Dense d("dense", din, dout, rng);
            core::ParamRefs ps;
            d.params(ps);
            track(vp::test::check_gradients(
                ps, [&](core::Tape& t) { return t.mean(t.gelu(d.forward(t, t.constant(x)))); }));
        }
        {
            const int64_t len = 6 + static_cast<int64_t>(rng.below(5));
            core::Conv1d c("conv", din, dout, 3, 2, 1, rng);
            Tensor cx({din, len});
            for (double& v : cx.data) v = rng.gaussian();
            core::ParamRefs ps;
            c.params(ps);
            track(vp::test::check_gradients(
                ps, [&](core::Tape& t) { return t.mean(t.relu(c.forward(t, t.constant(cx)))); }));
        }
        {
            const int64_t len = 3 + static_cast<int64_t>(rng.below(4));
            core::ConvTranspose1d c("convt", din, dout, 2, 2, rng);
            Tensor cx({din, len});
            for (double& v : cx.data) v = rng.gaussian();
            core::ParamRefs ps;
            c.params(ps);
            track(vp::test::check_gradients(ps, [&](core::Tape& t) {
                return t.mean(c.forward(t, t.constant(cx)));
            }));
        }
        {
            core::LayerNorm ln("ln", din);
            core::ParamRefs ps;
            ln.params(ps);
            track(vp::test::check_gradients(
                ps, [&](core::Tape& t) { return t.mean(ln.forward(t, t.constant(x))); }));
        }
        {
            core::Embedding e("emb", 7, din, rng);
            std::vector<int32_t> ids = {0, 3, 6, 5};
            core::ParamRefs ps;
            e.params(ps);
            track(vp::test::check_gradients(
                ps, [&](core::Tape& t) { return t.mean(t.softmax_rows(e.forward(t, ids))); }));
        }
        {
            const int64_t dm = 4 + 2 * static_cast<int64_t>(rng.below(3));
            core::CausalSelfAttention att("att", dm, 2, rng);
            Tensor ax({n, dm});
            for (double& v : ax.data) v = rng.gaussian();
            core::ParamRefs ps;
            att.params(ps);
            track(vp::test::check_gradients(
                ps, [&](core::Tape& t) { return t.mean(att.forward(t, t.constant(ax))); }));
        }
        {
            core::Parameter logits("logits", Tensor({n, 5}));
            for (double& v : logits.value.data) v = rng.gaussian();
            std::vector<int32_t> targets;
            for (int64_t i = 0; i < n; ++i) targets.push_back(static_cast<int32_t>(rng.below(5)));
            track(vp::test::check_gradients({&logits}, [&](core::Tape& t) {
                return t.cross_entropy_mean(t.param(logits), targets);
            }));
        }
    }
    if (worst >= 1e-4) return fail("max relative error " + std::to_string(worst) + " >= 1e-4");
    return "";
}

// ------------------------------------------------------------ criterion 2

std::string criterion_quantizer() {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int64_t k = 1 + static_cast<int64_t>(rng.below(14));
        const int64_t d = 1 + static_cast<int64_t>(rng.below(6));
        motion::Codebook cb(k, d);
        for (double& x : cb.entries.data) x = static_cast<double>(rng.below(4));
        std::vector<double> z(static_cast<size_t>(d));
        for (double& x : z) x = static_cast<double>(rng.below(4)) * 0.5;
        int32_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int64_t c = 0; c < k; ++c) {
            double dist = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                const double diff = z[static_cast<size_t>(j)] - cb.entries.at(c, j);
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<int32_t>(c);
            }
        }
        if (motion::quantize(z, cb).index != best)
            return fail("mismatch vs exhaustive search at trial " + std::to_string(trial));
    }
    return "";
}

// ------------------------------------------------------------ criterion 3

std::string criterion_token_algebra() {
    tokens::VocabLayout l;
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const int nv = static_cast<int>(rng.below(20));
        const int nm = static_cast<int>(rng.below(20));
        std::vector<int32_t> sem, pit, f, b, h;
        for (int i = 0; i < nv; ++i) {
            sem.push_back(static_cast<int32_t>(rng.below(500)));
            pit.push_back(static_cast<int32_t>(rng.below(20)));
        }
        for (int i = 0; i < nm; ++i) {
            f.push_back(static_cast<int32_t>(rng.below(512)));
            b.push_back(static_cast<int32_t>(rng.below(512)));
            h.push_back(static_cast<int32_t>(rng.below(512)));
        }
        tokens::TokenStream mixed = tokens::mix(
            tokens::interleave_vocal(sem, pit, l),
            tokens::interleave_motion({motion::Part::face, f}, {motion::Part::body, b},
                                      {motion::Part::hand, h}, l),
            l);
        tokens::DecoupleReport r = tokens::decouple(mixed, l);
        if (!r.violations.empty() || r.truncated_tail != 0 || r.vocal.semantic_ids != sem ||
            r.vocal.pitch_ids != pit || r.face.ids != f || r.body.ids != b || r.hand.ids != h)
            return fail("well-formed round trip failed at trial " + std::to_string(trial));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        tokens::TokenStream s;
        s.ids.push_back(tokens::VocabLayout::kStartVocal);
        const int n = 1 + static_cast<int>(rng.below(50));
        for (int i = 0; i < n; ++i)
            s.ids.push_back(static_cast<int32_t>(rng.below(static_cast<uint64_t>(l.total()) - 1) + 1));
        tokens::DecoupleReport r = tokens::decouple(s, l);
        if (r.vocal.semantic_ids.size() != r.vocal.pitch_ids.size() ||
            r.face.ids.size() != r.body.ids.size() || r.body.ids.size() != r.hand.ids.size())
            return fail("malformed stream produced a partial group at trial " + std::to_string(trial));
    }
    return "";
}

// ------------------------------------------------------------ criterion 4

std::string criterion_codec_training() {
    // >= 20 min of motion at 20 fps: 38 songs x 32 s = 1216 s = 24320 frames
    pipeline::FixtureConfig fcfg;
    fcfg.songs = 38;
    fcfg.lines_per_song = 8;
    fcfg.seed = 4;
    std::vector<motion::MotionSequence> seqs;
    int64_t total_frames = 0;
    for (int64_t i = 0; i < fcfg.songs; ++i) {
        seqs.push_back(pipeline::make_fixture_song(i, fcfg).motion);
        total_frames += seqs.back().length();
    }
    if (total_frames < 20 * 60 * 20) return fail("fixture shorter than 20 min at 20 fps");

    motion::CodecConfig cc;
    cc.codebook_size = 128;
    cc.code_dim = 32;
    cc.hidden = 48;
    cc.window_length = 72;
    core::AdamConfig adam;
    adam.learning_rate = 2e-3;
    const int64_t steps = 400, batch = 8;

    for (motion::Part part : {motion::Part::face, motion::Part::body, motion::Part::hand}) {
        std::vector<Tensor> windows;
        for (const auto& s : seqs) {
            auto w = motion::cut_windows(s.extract_part(part), cc.window_length);
            for (auto& t : w) windows.push_back(std::move(t));
        }
        motion::PartCodec trained(motion::part_name(part), motion::part_dim(part), cc, 91);
        trained.fit_normalizer(windows);
        motion::PartCodec untrained(motion::part_name(part), motion::part_dim(part), cc, 91);
        untrained.fit_normalizer(windows);

        motion::TrainCurve curve = motion::train_codec(trained, windows, adam, steps, batch, 92);
        const double early = curve.smoothed(10, 9);
        const double late = curve.smoothed(10, steps - 1);
        if (!(late < early))
            return fail(std::string(motion::part_name(part)) + ": smoothed loss did not decrease (" +
                        std::to_string(early) + " -> " + std::to_string(late) + ")");

        auto part_mpjpe = [&](motion::PartCodec& codec) {
            double acc = 0.0;
            int64_t n = 0;
            for (size_t i = 0; i < seqs.size(); i += 8) {
                const motion::MotionSequence& gt = seqs[i];
                const Tensor dec = codec.decode_ids(codec.encode_ids(gt.extract_part(part)));
                motion::MotionSequence rebuilt = gt;
                Tensor cut({gt.length(), dec.shape[1]});
                std::copy_n(dec.data.begin(), cut.numel(), cut.data.begin());
                rebuilt.insert_part(part, cut);
                acc += metrics::motion_reconstruction(rebuilt, gt).mpjpe;
                ++n;
            }
            return acc / static_cast<double>(n);
        };
        const double mpjpe_trained = part_mpjpe(trained);
        const double mpjpe_untrained = part_mpjpe(untrained);
        if (!(mpjpe_trained < 0.5 * mpjpe_untrained))
            return fail(std::string(motion::part_name(part)) + ": trained MPJPE " +
                        std::to_string(mpjpe_trained) + " not < 50% of untrained " +
                        std::to_string(mpjpe_untrained));
    }

    // collapse-vs-reset experiment (adversarial init, face part)
    std::vector<Tensor> face_windows;
    for (size_t i = 0; i < seqs.size(); i += 2) {
        auto w = motion::cut_windows(seqs[i].extract_part(motion::Part::face), cc.window_length);
        for (auto& t : w) face_windows.push_back(std::move(t));
    }
    auto utilization = [&](motion::PartCodec& codec) {
        std::set<int32_t> used;
        for (size_t i = 0; i < face_windows.size(); i += 2)
            for (int32_t id : codec.encode_ids(face_windows[i])) used.insert(id);
        return static_cast<int64_t>(used.size());
    };
    motion::CodecConfig adversarial_cfg = cc;
    adversarial_cfg.reset_staleness = 60;

    motion::PartCodec no_reset("face", motion::part_dim(motion::Part::face), adversarial_cfg, 93);
    no_reset.fit_normalizer(face_windows);
    Rng adv_a(94);
    no_reset.codebook().init_gaussian(adv_a, 0.01, 100.0);
    motion::train_codec(no_reset, face_windows, adam, 250, batch, 95, /*enable_reset=*/false);
    const int64_t collapsed = utilization(no_reset);
    if (collapsed > 2) return fail("no-reset run used " + std::to_string(collapsed) + " codes (> 2)");

    motion::PartCodec with_reset("face", motion::part_dim(motion::Part::face), adversarial_cfg, 93);
    with_reset.fit_normalizer(face_windows);
    Rng adv_b(94);
    with_reset.codebook().init_gaussian(adv_b, 0.01, 100.0);
    motion::train_codec(with_reset, face_windows, adam, 250, batch, 95, /*enable_reset=*/true);
    const int64_t spread = utilization(with_reset);
    if (spread < cc.codebook_size / 2)
        return fail("reset run used only " + std::to_string(spread) + " of " +
                    std::to_string(cc.codebook_size) + " codes");
    return "";
}

// ------------------------------------------------------------ criterion 5

std::string criterion_lm_memorization() {
    tokens::VocabLayout layout;  // default: 2060 ids
    lm::LMConfig cfg;            // desk defaults: 4 layers, 4 heads, d_model 128
    cfg.epochs = 300;
    cfg.batch_size = 16;
    cfg.learning_rate = 4e-3;
    cfg.stop_loss = 0.02;
    lm::TokenLM model(cfg, layout, 501);

    Rng rng(502);
    std::vector<lm::TrainClip> corpus;
    const char* words[] = {"neon", "river", "static", "ember", "vault", "echo", "prism", "drift"};
    for (int i = 0; i < 16; ++i) {
        std::string lyric;
        for (int w = 0; w < 3; ++w)
            lyric += std::string(w ? " " : "") + words[rng.below(8)] + std::to_string(i);
        std::vector<int32_t> sem, pit, f, b, h;
        const int pairs = 8 + static_cast<int>(rng.below(3));
        for (int p = 0; p < pairs; ++p) {
            sem.push_back(static_cast<int32_t>(rng.below(500)));
            pit.push_back(static_cast<int32_t>(rng.below(20)));
        }
        for (int m = 0; m < 4; ++m) {
            f.push_back(static_cast<int32_t>(rng.below(512)));
            b.push_back(static_cast<int32_t>(rng.below(512)));
            h.push_back(static_cast<int32_t>(rng.below(512)));
        }
        tokens::TokenStream stream = tokens::mix(
            tokens::interleave_vocal(sem, pit, layout),
            tokens::interleave_motion({motion::Part::face, f}, {motion::Part::body, b},
                                      {motion::Part::hand, h}, layout),
            layout);
        corpus.push_back({"toy" + std::to_string(i), lyric, std::move(stream)});
    }

    const double initial =
        model.pair_loss(model.encode_text(corpus[0].lyric).tokens, corpus[0].stream.ids);
    const double expected = std::log(static_cast<double>(layout.total()));
    if (std::abs(initial - expected) / expected > 0.02)
        return fail("initial loss " + std::to_string(initial) + " not within 2% of ln(vocab) " +
                    std::to_string(expected));

    lm::LMTrainCurve curve = lm::train_lm(model, corpus, 503);
    const double final_loss = curve.epoch_loss.back();
    if (!(final_loss < 0.1))
        return fail("final loss " + std::to_string(final_loss) + " >= 0.1 nats/token");

    lm::SamplerConfig greedy{1, 1.0, 0};
    for (int i : {0, 7}) {
        lm::GenerateResult out = model.generate(corpus[static_cast<size_t>(i)].lyric, greedy, 128);
        if (out.stream.ids != corpus[static_cast<size_t>(i)].stream.ids)
            return fail("greedy decoding did not reproduce training stream " + std::to_string(i));
    }
    return "";
}

// ------------------------------------------------------------ criterion 6

std::string criterion_fid_oracle() {
    Rng rng(606);
    auto sample = [&](const std::vector<double>& mu, const Tensor& cov, int64_t n) {
        const Tensor l = metrics::cholesky(cov);
        metrics::FeatureSet fs;
        const int64_t f = static_cast<int64_t>(mu.size());
        fs.rows = Tensor({n, f});
        std::vector<double> g(static_cast<size_t>(f));
        for (int64_t i = 0; i < n; ++i) {
            for (double& x : g) x = rng.gaussian();
            for (int64_t r = 0; r < f; ++r) {
                double acc = mu[static_cast<size_t>(r)];
                for (int64_t c = 0; c <= r; ++c) acc += l.at(r, c) * g[static_cast<size_t>(c)];
                fs.rows.at(i, r) = acc;
            }
        }
        return fs;
    };
    auto random_cov = [&](int64_t n) {
        Tensor a({n, n});
        for (double& x : a.data) x = rng.gaussian() / std::sqrt(static_cast<double>(n));
        Tensor s({n, n});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                double acc = i == j ? 0.6 : 0.0;
                for (int64_t k2 = 0; k2 < n; ++k2) acc += a.at(i, k2) * a.at(j, k2);
                s.at(i, j) = acc;
            }
        return s;
    };

    for (int cse = 0; cse < 10; ++cse) {
        std::vector<double> mu1(8, 0.0), mu2(8, 0.0);
        for (int j = 0; j < 8; ++j) {
            mu1[static_cast<size_t>(j)] = rng.gaussian();
            mu2[static_cast<size_t>(j)] = rng.gaussian();
        }
        const Tensor c1 = random_cov(8), c2 = random_cov(8);
        double mean_term = 0.0;
        for (int j = 0; j < 8; ++j) {
            const double d = mu1[static_cast<size_t>(j)] - mu2[static_cast<size_t>(j)];
            mean_term += d * d;
        }
        double tr = 0.0;
        for (int64_t i = 0; i < 8; ++i) tr += c1.at(i, i) + c2.at(i, i);
        const double truth = mean_term + tr - 2.0 * metrics::trace_sqrt_product(c1, c2);

        metrics::FeatureSet a = sample(mu1, c1, 5000), b = sample(mu2, c2, 5000);
        const double estimate = metrics::fid(a, b);
        if (std::abs(estimate - truth) / std::max(truth, 1e-9) > 0.05)
            return fail("case " + std::to_string(cse) + ": sampled " + std::to_string(estimate) +
                        " vs closed form " + std::to_string(truth));
        if (cse == 0) {
            if (metrics::fid(a, a) > 1e-6)
                return fail("FID(X, X) = " + std::to_string(metrics::fid(a, a)) + " > 1e-6");
        }
    }
    return "";
}

// ------------------------------------------------------------ criterion 7

std::string criterion_beat_constancy() {
    metrics::BeatSet audio{{1.0, 2.0, 3.0, 4.0}};
    const double aligned = metrics::beat_alignment_score({{2.0, 3.0}}, audio, 0.1);
    if (std::abs(aligned - 1.0) > 1e-9) return fail("aligned beats scored " + std::to_string(aligned));
    const double offset = metrics::beat_alignment_score({{2.1}}, audio, 0.1);
    if (std::abs(offset - std::exp(-0.5)) > 1e-9)
        return fail("sigma offset scored " + std::to_string(offset) + " != exp(-0.5)");

    pipeline::FixtureConfig fcfg;
    fcfg.lines_per_song = 4;
    for (int trial = 0; trial < 10; ++trial) {
        fcfg.seed = 700 + static_cast<uint64_t>(trial);
        pipeline::FixtureSong song = pipeline::make_fixture_song(trial, fcfg);
        metrics::BeatConstancyResult matched =
            metrics::beat_constancy(song.motion, song.audio, fcfg.sample_rate);
        std::vector<double> shifted(song.audio.size(), 0.0);
        const int64_t shift = static_cast<int64_t>(song.beat_period / 2.0 * fcfg.sample_rate);
        for (size_t i = static_cast<size_t>(shift); i < shifted.size(); ++i)
            shifted[i] = song.audio[i - shift];
        metrics::BeatConstancyResult off2 =
            metrics::beat_constancy(song.motion, shifted, fcfg.sample_rate);
        if (!matched.defined || !off2.defined)
            return fail("trial " + std::to_string(trial) + ": BC undefined on the fixture");
        if (!(matched.bc > off2.bc))
            return fail("trial " + std::to_string(trial) + ": matched " + std::to_string(matched.bc) +
                        " !> shifted " + std::to_string(off2.bc));
    }
    return "";
}

// ------------------------------------------------------------ criterion 8

std::string criterion_f0_chain() {
    const int sr = 16000;
    auto sine = [&](double freq, double seconds) {
        std::vector<double> out(static_cast<size_t>(seconds * sr));
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = 0.3 * std::sin(2.0 * 3.14159265358979323846 * freq * static_cast<double>(i) / sr);
        return out;
    };
    for (double hz : {110.0, 220.0, 330.0, 440.0}) {
        vocal::F0Track t = vocal::estimate_f0(sine(hz, 1.0), sr, {});
        int64_t voiced = 0, gross = 0;
        for (size_t i = 2; i + 2 < t.f0_hz.size(); ++i) {
            if (!t.voiced[i]) return fail("tone " + std::to_string(hz) + ": interior frame unvoiced");
            ++voiced;
            if (std::abs(t.f0_hz[i] - hz) / hz > 0.2) ++gross;
        }
        if (voiced == 0 || 100.0 * static_cast<double>(gross) / static_cast<double>(voiced) >= 1.0)
            return fail("tone " + std::to_string(hz) + " GPE >= 1%");
    }
    {
        const double dur = 4.0, f_lo = 110.0, f_hi = 440.0, rate = (f_hi - f_lo) / dur;
        std::vector<double> sweep(static_cast<size_t>(dur * sr));
        for (size_t i = 0; i < sweep.size(); ++i) {
            const double t = static_cast<double>(i) / sr;
            sweep[i] = 0.3 * std::sin(2.0 * 3.14159265358979323846 * (f_lo * t + 0.5 * rate * t * t));
        }
        vocal::F0Track sw = vocal::estimate_f0(sweep, sr, {});
        int64_t voiced = 0, gross = 0;
        for (size_t i = 2; i + 2 < sw.f0_hz.size(); ++i) {
            if (!sw.voiced[i]) continue;
            ++voiced;
            const double t_center = (static_cast<double>(i) * 0.02 * sr + 0.02 * sr) / sr;
            const double truth = f_lo + rate * t_center;
            if (std::abs(sw.f0_hz[i] - truth) / truth > 0.2) ++gross;
        }
        if (voiced < 100 || 100.0 * static_cast<double>(gross) / static_cast<double>(voiced) >= 1.0)
            return fail("sweep GPE >= 1% (" + std::to_string(gross) + "/" + std::to_string(voiced) + ")");
    }

    auto contours = [&](int count, uint64_t seed) {
        Rng rng(seed);
        std::vector<vocal::F0Sample> out;
        for (int i = 0; i < count; ++i) {
            vocal::F0Sample s;
            s.singer_id = i % 2 ? "a" : "b";
            const double base = 110.0 + rng.uniform() * 300.0;
            const double wob = 0.15 + rng.uniform() * 0.15;
            const double speed = 0.1 + rng.uniform() * 0.15;
            for (int64_t t = 0; t < 60; ++t) {
                s.f0_hz.push_back(base * (1.0 + wob * std::sin(speed * static_cast<double>(t))));
                s.voiced.push_back(true);
            }
            out.push_back(std::move(s));
        }
        return out;
    };
    const std::vector<vocal::F0Sample> train = contours(32, 801);
    const std::vector<vocal::F0Sample> held_out = contours(10, 802);
    core::AdamConfig adam;
    adam.learning_rate = 3e-3;
    vocal::F0CodecConfig fc;
    fc.code_dim = 4;
    fc.hidden = 16;
    fc.singer_dim = 16;
    fc.kernel = 5;
    fc.reset_staleness = 50;

    auto roundtrip_gpe = [&](vocal::F0Codec& codec) {
        int64_t both = 0, gross = 0;
        for (const vocal::F0Sample& s : held_out) {
            const std::vector<double> back =
                codec.decode_pitch(codec.encode_pitch(s.f0_hz, s.voiced, s.singer_id), s.singer_id);
            for (size_t i = 0; i < s.f0_hz.size(); ++i) {
                ++both;
                if (std::abs(back[i] - s.f0_hz[i]) / s.f0_hz[i] > 0.2) ++gross;
            }
        }
        return 100.0 * static_cast<double>(gross) / static_cast<double>(both);
    };

    vocal::F0Codec big(fc, {"a", "b"}, 803);
    vocal::train_f0_vq(big, train, adam, 300, 8, 804);
    const double gpe20 = roundtrip_gpe(big);
    if (!(gpe20 < 5.0)) return fail("20-code round-trip GPE " + std::to_string(gpe20) + " >= 5%");

    vocal::F0CodecConfig fc5 = fc;
    fc5.codebook_size = 5;
    vocal::F0Codec small(fc5, {"a", "b"}, 803);
    vocal::train_f0_vq(small, train, adam, 300, 8, 804);
    const double gpe5 = roundtrip_gpe(small);
    if (!(gpe5 > gpe20))
        return fail("5-code GPE " + std::to_string(gpe5) + " not strictly worse than 20-code " +
                    std::to_string(gpe20));
    return "";
}

// ------------------------------------------------------------ criterion 9

std::string criterion_metric_oracles() {
    Rng rng(909);
    const std::string alphabet = "abc d";
    for (int trial = 0; trial < 100; ++trial) {
        std::string a, b;
        const int la = 1 + static_cast<int>(rng.below(14));
        const int lb = static_cast<int>(rng.below(14));
        for (int i = 0; i < la; ++i) a.push_back(alphabet[rng.below(alphabet.size())]);
        for (int i = 0; i < lb; ++i) b.push_back(alphabet[rng.below(alphabet.size())]);
        const std::string an = metrics::normalize_text(a), bn = metrics::normalize_text(b);
        if (an.empty()) continue;
        std::vector<std::vector<int64_t>> d(an.size() + 1, std::vector<int64_t>(bn.size() + 1, 0));
        for (size_t i = 0; i <= an.size(); ++i) d[i][0] = static_cast<int64_t>(i);
        for (size_t j = 0; j <= bn.size(); ++j) d[0][j] = static_cast<int64_t>(j);
        for (size_t i = 1; i <= an.size(); ++i)
            for (size_t j = 1; j <= bn.size(); ++j)
                d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                    d[i - 1][j - 1] + (an[i - 1] == bn[j - 1] ? 0 : 1)});
        const double oracle =
            static_cast<double>(d[an.size()][bn.size()]) / static_cast<double>(an.size());
        if (metrics::cer(a, b) != oracle)
            return fail("cer mismatch vs DP oracle at trial " + std::to_string(trial));
    }

    const metrics::GpeResult g = metrics::gpe({100, 100, 100, 100}, {true, true, true, true},
                                              {100, 125, 119, 100}, {true, true, true, true});
    if (!g.defined || std::abs(g.percent - 25.0) > 1e-12)
        return fail("gpe hand case != 25%");
    if (std::abs(metrics::vde({true, true, false, false}, {true, false, false, true}) - 50.0) > 1e-12)
        return fail("vde hand case != 50%");

    for (int trial = 0; trial < 100; ++trial) {
        const int64_t t = 4, p = 6;
        metrics::LandmarkSeq gt;
        gt.fps = 20.0;
        gt.positions = Tensor({t, p, 3});
        for (double& x : gt.positions.data) x = rng.gaussian(0.0, 40.0);
        metrics::LandmarkSeq gen = gt;
        for (double& x : gen.positions.data) x += rng.gaussian(0.0, 4.0);
        const metrics::ReconstructionErrors e = metrics::landmark_reconstruction(gen, gt);
        if (e.pampjpe > e.mpjpe + 1e-9)
            return fail("PAMPJPE > MPJPE at trial " + std::to_string(trial));
    }
    {
        metrics::LandmarkSeq gt;
        gt.fps = 20.0;
        gt.positions = Tensor({3, 8, 3});
        for (double& x : gt.positions.data) x = rng.gaussian(0.0, 50.0);
        metrics::LandmarkSeq gen = gt;
        const double ang = 0.7;
        for (int64_t i = 0; i < 3; ++i)
            for (int64_t j = 0; j < 8; ++j) {
                const double x = gt.at(i, j, 0), y = gt.at(i, j, 1);
                gen.at(i, j, 0) = std::cos(ang) * x - std::sin(ang) * y;
                gen.at(i, j, 1) = std::sin(ang) * x + std::cos(ang) * y;
            }
        const metrics::ReconstructionErrors e = metrics::landmark_reconstruction(gen, gt);
        if (e.pampjpe > 1e-9)
            return fail("rigidly rotated copy has PAMPJPE " + std::to_string(e.pampjpe) + " > 1e-9");
    }
    return "";
}

// ------------------------------------------------------------ criterion 10

std::string criterion_e2e_determinism() {
    namespace fs = std::filesystem;
    const std::string base = "acceptance_e2e";
    fs::remove_all(base);

    auto one_run = [&](const std::string& tag) {
        pipeline::BuildConfig bc;
        bc.fixture.songs = 5;
        bc.fixture.lines_per_song = 4;
        bc.fixture.seed = 10;
        bc.out_dir = base + "/" + tag + "/data";
        bc.seed = 10;
        const pipeline::BuiltDataset built = pipeline::dataset_build(bc);
        pipeline::StackConfig sc = pipeline::StackConfig::quick();
        sc.seed = 11;
        pipeline::StackPaths paths{base + "/" + tag + "/artifacts"};
        pipeline::run_stack(built.manifest_path, sc, paths);
        return paths;
    };
    const pipeline::StackPaths a = one_run("run_a");
    const pipeline::StackPaths b = one_run("run_b");

    auto read_bytes = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    const std::pair<std::string, std::string> pairs[] = {
        {a.train_streams(), b.train_streams()}, {a.generated(), b.generated()},
        {a.report(), b.report()},               {a.generation_csv(), b.generation_csv()},
        {a.reconstruction_csv(), b.reconstruction_csv()}};
    for (const auto& [pa, pb] : pairs) {
        const std::string ba = read_bytes(pa), bb = read_bytes(pb);
        if (ba.empty()) return fail("missing artifact " + pa);
        if (ba != bb) return fail("bytes differ: " + pa + " vs " + pb);
    }
    fs::remove_all(base);
    return "";
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "gradient fidelity (analytic vs central differences, all layer types)", criterion_gradients},
        {2, "quantizer matches exhaustive nearest-neighbor search with tie rule", criterion_quantizer},
        {3, "token algebra: mix/decouple inverse + no partial groups", criterion_token_algebra},
        {4, "codec training: loss drop, MPJPE halved, reset vs collapse", criterion_codec_training},
        {5, "lm memorization: <0.1 nats, greedy replay, ln(V) at init", criterion_lm_memorization},
        {6, "fid matches the Gaussian closed form within 5% at n=5000", criterion_fid_oracle},
        {7, "beat constancy kernel values and fixture alignment", criterion_beat_constancy},
        {8, "f0 chain: estimator GPE <1%, VQ round trip <5%, 5-code worse", criterion_f0_chain},
        {9, "metric oracles: CER DP, GPE/VDE hand cases, Procrustes bounds", criterion_metric_oracles},
        {10, "end-to-end determinism: byte-identical streams and reports", criterion_e2e_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string reason;
        try {
            reason = c.run();
        } catch (const std::exception& e) {
            reason = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (reason.empty()) {
            std::printf("PASS  criterion %2d  (%6.1fs)  %s\n", c.id, secs, c.name.c_str());
        } else {
            std::printf("FAIL  criterion %2d  (%6.1fs)  %s\n      %s\n", c.id, secs, c.name.c_str(),
                        reason.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
