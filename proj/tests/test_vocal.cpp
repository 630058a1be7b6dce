#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "vocapose/core/fft.hpp"
#include "vocapose/core/rng.hpp"
#include "vocapose/metrics/metrics.hpp"
#include "vocapose/vocal/f0_codec.hpp"
#include "vocapose/vocal/features.hpp"
#include "vocapose/vocal/kmeans.hpp"
#include "vocapose/vocal/resynth.hpp"
#include "vocapose/vocal/tokenizer.hpp"
#include "vocapose/vocal/wav.hpp"

using namespace vp::vocal;
using vp::core::Rng;
using vp::core::Tensor;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> sine(double freq, double seconds, int sr, double amp = 0.3) {
    std::vector<double> out(static_cast<size_t>(seconds * sr));
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / sr);
    return out;
}

}  // namespace

TEST_CASE("wav round trip") {
    std::vector<double> samples = sine(440.0, 0.25, 16000, 0.8);
    write_wav("wav_test.wav", samples, 16000);
    WavData re = read_wav("wav_test.wav");
    CHECK(re.sample_rate == 16000);
    REQUIRE(re.samples.size() == samples.size());
    for (size_t i = 0; i < samples.size(); i += 97)
        CHECK(re.samples[i] == doctest::Approx(samples[i]).epsilon(1e-3));  // 16-bit rounding
    std::remove("wav_test.wav");
}

TEST_CASE("extract_features: frame count, tone bin, silence floor") {
    const int sr = 16000;
    FeatureConfig cfg;

    // 2.0 s at 20 ms hop -> 100 frames
    Tensor f = extract_features(sine(220.0, 2.0, sr), sr, cfg);
    CHECK(f.shape == vp::core::Shape{100, 40});

    // pure 220 Hz tone: feature argmax matches the filter whose response at
    // 220 Hz is largest (the bin covering the tone)
    int expected_bin = 0;
    double best_w = -1.0;
    for (int m = 0; m < 40; ++m) {
        const double w = mel_filter_weight(m, 220.0, 40, sr);
        if (w > best_w) {
            best_w = w;
            expected_bin = m;
        }
    }
    REQUIRE(best_w > 0.0);
    for (int64_t t = 10; t < 90; t += 17) {
        int argmax = 0;
        for (int m = 1; m < 40; ++m)
            if (f.at(t, m) > f.at(t, argmax)) argmax = m;
        CHECK(argmax == expected_bin);
    }

    // silence: all frames at the log floor
    std::vector<double> silence(static_cast<size_t>(sr), 0.0);
    Tensor fs = extract_features(silence, sr, cfg);
    const double floor = std::log(cfg.log_floor);
    for (int64_t t = 0; t < fs.shape[0]; ++t)
        for (int m = 0; m < 40; ++m) CHECK(fs.at(t, m) == doctest::Approx(floor));

    CHECK_THROWS_AS(extract_features({}, sr, cfg), std::invalid_argument);
    CHECK_THROWS_AS(extract_features(sine(220, 1.0, sr), 8000, cfg), std::invalid_argument);
}

TEST_CASE("kmeans: separated blobs, k=1 mean, monotone inertia") {
    Rng rng(1);
    Tensor blobs({200, 2});
    for (int64_t i = 0; i < 200; ++i) {
        const double cx = i < 100 ? 10.0 : -10.0;
        blobs.at(i, 0) = cx + 0.1 * rng.gaussian();
        blobs.at(i, 1) = cx + 0.1 * rng.gaussian();
    }
    KMeansModel m = fit_units(blobs, 2, 20, 2);
    // centroids within 0.1 of blob means (order-free)
    auto near = [&](double cx) {
        for (int64_t c = 0; c < 2; ++c)
            if (std::abs(m.centroids.at(c, 0) - cx) < 0.1 && std::abs(m.centroids.at(c, 1) - cx) < 0.1)
                return true;
        return false;
    };
    CHECK(near(10.0));
    CHECK(near(-10.0));
    for (size_t i = 1; i < m.inertia_history.size(); ++i)
        CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] + 1e-9);

    KMeansModel one = fit_units(blobs, 1, 5, 3);
    double mx = 0.0, my = 0.0;
    for (int64_t i = 0; i < 200; ++i) {
        mx += blobs.at(i, 0);
        my += blobs.at(i, 1);
    }
    CHECK(one.centroids.at(0, 0) == doctest::Approx(mx / 200.0));
    CHECK(one.centroids.at(0, 1) == doctest::Approx(my / 200.0));

    CHECK_THROWS_AS(fit_units(Tensor({3, 2}), 5, 3, 4), std::invalid_argument);
}

TEST_CASE("assign_units equals brute-force nearest centroid on 1000 frames") {
    Rng rng(5);
    KMeansModel m;
    m.centroids = Tensor({12, 4});
    for (double& x : m.centroids.data) x = static_cast<double>(rng.below(3));
    Tensor frames({1000, 4});
    for (double& x : frames.data) x = static_cast<double>(rng.below(3)) * 0.7;
    const std::vector<int32_t> got = assign_units(frames, m);
    for (int64_t i = 0; i < 1000; ++i) {
        int32_t best = 0;
        double best_d = 1e300;
        for (int64_t c = 0; c < 12; ++c) {
            double d2 = 0.0;
            for (int64_t j = 0; j < 4; ++j) {
                const double d = frames.at(i, j) - m.centroids.at(c, j);
                d2 += d * d;
            }
            if (d2 < best_d) {
                best_d = d2;
                best = static_cast<int32_t>(c);
            }
        }
        REQUIRE(got[static_cast<size_t>(i)] == best);
    }
}

TEST_CASE("estimate_f0: tones, silence, sweep") {
    const int sr = 16000;
    F0Config cfg;

    for (double hz : {110.0, 220.0, 330.0, 440.0}) {
        F0Track t = estimate_f0(sine(hz, 1.0, sr), sr, cfg);
        const int64_t n = static_cast<int64_t>(t.f0_hz.size());
        int voiced_frames = 0, gross = 0;
        for (int64_t i = 2; i < n - 2; ++i) {  // interior frames
            CHECK(t.voiced[static_cast<size_t>(i)]);
            if (!t.voiced[static_cast<size_t>(i)]) continue;
            ++voiced_frames;
            CHECK(t.f0_hz[static_cast<size_t>(i)] == doctest::Approx(hz).epsilon(2.0 / hz));
            if (std::abs(t.f0_hz[static_cast<size_t>(i)] - hz) / hz > 0.2) ++gross;
        }
        CHECK(voiced_frames > 0);
        CHECK(gross == 0);
    }

    std::vector<double> silence(static_cast<size_t>(sr), 0.0);
    F0Track s = estimate_f0(silence, sr, cfg);
    for (size_t i = 0; i < s.voiced.size(); ++i) {
        CHECK_FALSE(s.voiced[i]);
        CHECK(s.f0_hz[i] == 0.0);
    }

    // 110 -> 440 Hz linear sweep, 4 s: phase = 2*pi*(f0*t + rate*t^2/2)
    const double dur = 4.0, f_lo = 110.0, f_hi = 440.0;
    const double rate = (f_hi - f_lo) / dur;
    std::vector<double> sweep(static_cast<size_t>(dur * sr));
    for (size_t i = 0; i < sweep.size(); ++i) {
        const double t = static_cast<double>(i) / sr;
        sweep[i] = 0.3 * std::sin(2.0 * kPi * (f_lo * t + 0.5 * rate * t * t));
    }
    F0Track sw = estimate_f0(sweep, sr, cfg);
    const int64_t win_half = static_cast<int64_t>(0.02 * sr);
    int64_t voiced_count = 0, gross = 0;
    for (size_t i = 2; i + 2 < sw.f0_hz.size(); ++i) {
        if (!sw.voiced[i]) continue;
        ++voiced_count;
        const double t_center = (static_cast<double>(i) * 0.02 * sr + win_half) / sr;
        const double truth = f_lo + rate * t_center;
        if (std::abs(sw.f0_hz[i] - truth) / truth > 0.2) ++gross;
    }
    REQUIRE(voiced_count > 100);
    CHECK(static_cast<double>(gross) / static_cast<double>(voiced_count) < 0.01);

    F0Config bad;
    bad.f0_min = 500;
    bad.f0_max = 60;
    CHECK_THROWS_AS(estimate_f0(sine(220, 1.0, sr), sr, bad), std::invalid_argument);
}

TEST_CASE("f0 vde on synthetic tones is zero against the construction") {
    const int sr = 16000;
    // 0.5 s tone + 0.5 s silence: voicing flags should flip at the boundary
    std::vector<double> audio = sine(220.0, 0.5, sr);
    audio.resize(static_cast<size_t>(sr), 0.0);
    F0Track t = estimate_f0(audio, sr, {});
    std::vector<bool> truth(t.voiced.size());
    for (size_t i = 0; i < truth.size(); ++i) truth[i] = (i + 1) * 320 <= static_cast<size_t>(sr / 2);
    // allow the two frames straddling the boundary to disagree
    int mismatches = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (truth[i] != t.voiced[i]) ++mismatches;
    CHECK(mismatches <= 2);
}

TEST_CASE("interpolated log contour bridges unvoiced gaps") {
    std::vector<double> f0 = {0, 100, 0, 0, 400, 0};
    std::vector<bool> voiced = {false, true, false, false, true, false};
    std::vector<double> c = F0Codec::interpolate_log_contour(f0, voiced);
    CHECK(c[0] == doctest::Approx(std::log(100.0)));
    CHECK(c[1] == doctest::Approx(std::log(100.0)));
    const double step = (std::log(400.0) - std::log(100.0)) / 3.0;
    CHECK(c[2] == doctest::Approx(std::log(100.0) + step));
    CHECK(c[3] == doctest::Approx(std::log(100.0) + 2 * step));
    CHECK(c[4] == doctest::Approx(std::log(400.0)));
    CHECK(c[5] == doctest::Approx(std::log(400.0)));

    std::vector<double> flat = F0Codec::interpolate_log_contour({0, 0}, {false, false}, 1.5);
    CHECK(flat[0] == doctest::Approx(1.5));
}

namespace {
F0CodecConfig tiny_f0_config(int64_t codebook = 20) {
    F0CodecConfig cfg;
    cfg.codebook_size = codebook;
    cfg.code_dim = 4;
    cfg.hidden = 16;
    cfg.singer_dim = 8;
    cfg.kernel = 5;
    cfg.reset_staleness = 40;
    return cfg;
}

std::vector<F0Sample> contour_corpus(int count, uint64_t seed) {
    Rng rng(seed);
    std::vector<F0Sample> out;
    for (int i = 0; i < count; ++i) {
        const int64_t frames = 50;
        F0Sample s;
        s.singer_id = i % 2 == 0 ? "a" : "b";
        const double base = 110.0 + rng.uniform() * 250.0;
        const double wob = 0.1 + rng.uniform() * 0.2;
        for (int64_t t = 0; t < frames; ++t) {
            const double f = base * (1.0 + wob * std::sin(0.15 * static_cast<double>(t)));
            s.f0_hz.push_back(f);
            s.voiced.push_back(true);
        }
        out.push_back(std::move(s));
    }
    return out;
}

double roundtrip_gpe(F0Codec& codec, const std::vector<F0Sample>& samples) {
    int64_t both = 0, gross = 0;
    for (const F0Sample& s : samples) {
        const std::vector<int32_t> ids = codec.encode_pitch(s.f0_hz, s.voiced, s.singer_id);
        const std::vector<double> back = codec.decode_pitch(ids, s.singer_id);
        for (size_t i = 0; i < s.f0_hz.size(); ++i) {
            if (!s.voiced[i]) continue;
            ++both;
            if (std::abs(back[i] - s.f0_hz[i]) / s.f0_hz[i] > 0.2) ++gross;
        }
    }
    return 100.0 * static_cast<double>(gross) / static_cast<double>(both);
}
}  // namespace

TEST_CASE("f0 vq: ids bounded, unknown singer rejected, round trip learns") {
    F0Codec codec(tiny_f0_config(), {"a", "b"}, 7);
    std::vector<F0Sample> corpus = contour_corpus(24, 8);

    CHECK_THROWS_AS(codec.encode_pitch({220.0}, {true}, "nobody"), std::invalid_argument);

    vp::core::AdamConfig adam;
    adam.learning_rate = 3e-3;
    train_f0_vq(codec, corpus, adam, 220, 6, 9);

    for (const F0Sample& s : corpus) {
        const std::vector<int32_t> ids = codec.encode_pitch(s.f0_hz, s.voiced, s.singer_id);
        CHECK(ids.size() == s.f0_hz.size());
        for (int32_t id : ids) {
            CHECK(id >= 0);
            CHECK(id < 20);
        }
    }

    std::vector<F0Sample> held_out = contour_corpus(8, 99);
    const double g = roundtrip_gpe(codec, held_out);
    INFO("round-trip GPE " << g << "%");
    CHECK(g < 5.0);
}

TEST_CASE("f0 vq: 20 codes quantize no worse than 5 codes (sweep protocol)") {
    std::vector<F0Sample> corpus = contour_corpus(24, 10);
    vp::core::AdamConfig adam;
    adam.learning_rate = 3e-3;

    F0Codec big(tiny_f0_config(20), {"a", "b"}, 11);
    train_f0_vq(big, corpus, adam, 220, 6, 12);
    F0Codec small(tiny_f0_config(5), {"a", "b"}, 11);
    train_f0_vq(small, corpus, adam, 220, 6, 12);

    auto mse = [&](F0Codec& c) {
        double acc = 0.0;
        int64_t n = 0;
        for (const F0Sample& s : corpus) {
            const std::vector<double> back =
                c.decode_pitch(c.encode_pitch(s.f0_hz, s.voiced, s.singer_id), s.singer_id);
            for (size_t i = 0; i < s.f0_hz.size(); ++i) {
                const double d = std::log(back[i]) - std::log(s.f0_hz[i]);
                acc += d * d;
                ++n;
            }
        }
        return acc / static_cast<double>(n);
    };
    const double mse_big = mse(big), mse_small = mse(small);
    INFO("mse20 " << mse_big << " mse5 " << mse_small);
    CHECK(mse_big <= mse_small);
}

TEST_CASE("f0 codec save/load round trip") {
    F0Codec codec(tiny_f0_config(), {"a", "b"}, 13);
    std::vector<F0Sample> corpus = contour_corpus(6, 14);
    vp::core::AdamConfig adam;
    train_f0_vq(codec, corpus, adam, 20, 4, 15);
    codec.save("f0_test.ckpt");
    F0Codec re = F0Codec::load("f0_test.ckpt");
    const F0Sample& s = corpus[0];
    CHECK(re.encode_pitch(s.f0_hz, s.voiced, s.singer_id) ==
          codec.encode_pitch(s.f0_hz, s.voiced, s.singer_id));
    CHECK(re.singer_embedding("a").vector == codec.singer_embedding("a").vector);
    std::remove("f0_test.ckpt");
}

TEST_CASE("synthesize_frames: unvoiced noise RMS and no harmonic peaks") {
    SynthesisConfig cfg;
    cfg.noise_gain = 0.05;
    const int64_t frames = 100;
    std::vector<double> f0(frames, 0.0);
    std::vector<bool> voiced(frames, false);
    Tensor env({frames, 40});
    for (double& x : env.data) x = std::log(1e-10);
    std::vector<double> audio = synthesize_frames(f0, voiced, env, cfg);

    double rms = 0.0;
    for (double s : audio) rms += s * s;
    rms = std::sqrt(rms / static_cast<double>(audio.size()));
    CHECK(rms == doctest::Approx(cfg.noise_gain).epsilon(0.05));

    // flat-ish spectrum: strongest bin should not dominate total energy the
    // way a harmonic line would
    std::vector<double> mag = vp::core::magnitude_spectrum(audio.data(), 8192, 8192);
    double peak = 0.0, total = 0.0;
    for (size_t i = 4; i < mag.size(); ++i) {
        peak = std::max(peak, mag[i] * mag[i]);
        total += mag[i] * mag[i];
    }
    CHECK(peak / total < 0.05);
}

TEST_CASE("synthesize_frames: doubling f0 doubles the fundamental peak") {
    SynthesisConfig cfg;
    const int64_t frames = 120;
    Tensor env({frames, 40});
    // energy concentrated low so the fundamental dominates
    for (int64_t t = 0; t < frames; ++t)
        for (int64_t m = 0; m < 40; ++m) env.at(t, m) = -2.0 - 0.4 * static_cast<double>(m);

    auto peak_freq = [&](double hz) {
        std::vector<double> f0(frames, hz);
        std::vector<bool> voiced(frames, true);
        std::vector<double> audio = synthesize_frames(f0, voiced, env, cfg);
        std::vector<double> mag =
            vp::core::magnitude_spectrum(audio.data() + 4000, 16384, 16384);
        size_t argmax = 1;
        for (size_t i = 1; i < mag.size(); ++i)
            if (mag[i] > mag[argmax]) argmax = i;
        return static_cast<double>(argmax) * cfg.sample_rate / 16384.0;
    };
    const double p220 = peak_freq(220.0);
    const double p440 = peak_freq(440.0);
    CHECK(p220 == doctest::Approx(220.0).epsilon(0.02));
    CHECK(p440 == doctest::Approx(440.0).epsilon(0.02));
    CHECK(p440 / p220 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("resynthesize round trip keeps the pitch (GPE < 5%)") {
    // train a tiny tokenizer on synthetic tones, then analyze->resynth->analyze
    const int sr = 16000;
    VocalTokenizerConfig cfg;
    cfg.n_units = 12;
    cfg.kmeans_iterations = 10;
    cfg.f0 = tiny_f0_config();
    std::vector<ClipAudio> corpus;
    Rng rng(16);
    for (int i = 0; i < 10; ++i) {
        const double hz = 140.0 + 40.0 * static_cast<double>(i % 5);
        corpus.push_back(ClipAudio{sine(hz, 1.2, sr), i % 2 == 0 ? "a" : "b"});
    }
    VocalTokenizer::FitBudget budget;
    budget.f0_steps = 200;
    VocalTokenizer tok = VocalTokenizer::fit(corpus, cfg, budget, 17);

    const std::vector<double> original = sine(220.0, 1.0, sr);
    UnitSeq units = tok.analyze(original, "a");
    CHECK(units.semantic_ids.size() == units.pitch_ids.size());

    SynthesisConfig synth;
    std::vector<double> rebuilt = resynthesize(units, "a", tok.kmeans(), tok.f0_codec(), synth);

    F0Track ref = estimate_f0(original, sr, cfg.pitch_config());
    F0Track est = estimate_f0(rebuilt, sr, cfg.pitch_config());
    const size_t n = std::min(ref.f0_hz.size(), est.f0_hz.size());
    int64_t both = 0, gross = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!ref.voiced[i] || !est.voiced[i]) continue;
        ++both;
        if (std::abs(est.f0_hz[i] - ref.f0_hz[i]) / ref.f0_hz[i] > 0.2) ++gross;
    }
    REQUIRE(both > 10);
    const double g = 100.0 * static_cast<double>(gross) / static_cast<double>(both);
    INFO("roundtrip GPE " << g << "%");
    CHECK(g < 5.0);
}

TEST_CASE("vocal tokenizer save/load and unit file round trip") {
    const int sr = 16000;
    VocalTokenizerConfig cfg;
    cfg.n_units = 6;
    cfg.kmeans_iterations = 5;
    cfg.f0 = tiny_f0_config();
    std::vector<ClipAudio> corpus = {{sine(200, 0.8, sr), "a"}, {sine(300, 0.8, sr), "b"}};
    VocalTokenizer::FitBudget budget;
    budget.f0_steps = 30;
    VocalTokenizer tok = VocalTokenizer::fit(corpus, cfg, budget, 18);
    tok.save("vocal_tok_test.ckpt");
    VocalTokenizer re = VocalTokenizer::load("vocal_tok_test.ckpt");

    const std::vector<double> probe = sine(250, 0.6, sr);
    UnitSeq a = tok.analyze(probe, "a");
    UnitSeq b = re.analyze(probe, "a");
    CHECK(a.semantic_ids == b.semantic_ids);
    CHECK(a.pitch_ids == b.pitch_ids);
    std::remove("vocal_tok_test.ckpt");

    std::vector<UnitRecord> records = {{"clip0", a, "a", 0.02}};
    write_units_jsonl("units_test.jsonl", records);
    auto redo = read_units_jsonl("units_test.jsonl");
    REQUIRE(redo.size() == 1);
    CHECK(redo[0].units.semantic_ids == a.semantic_ids);
    CHECK(redo[0].units.pitch_ids == a.pitch_ids);
    CHECK(redo[0].hop_seconds == 0.02);
    std::remove("units_test.jsonl");
}

TEST_CASE("resynthesize rejects length mismatch beyond one frame") {
    KMeansModel km;
    km.centroids = Tensor({4, 40});
    F0Codec codec(tiny_f0_config(), {"a"}, 19);
    UnitSeq bad;
    bad.semantic_ids = {0, 1, 2, 3};
    bad.pitch_ids = {0};
    CHECK_THROWS_AS(resynthesize(bad, "a", km, codec, {}), std::invalid_argument);
}
