#include "vocapose/vocal/resynth.hpp"

#include <cmath>

#include "vocapose/core/rng.hpp"
#include "vocapose/vocal/features.hpp"

namespace vp::vocal {

using core::Tensor;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// linear amplitude of the mel envelope at freq_hz (weighted filter average)
double envelope_amplitude(const Tensor& envelopes, int64_t frame, double freq_hz, int n_mels,
                          int sample_rate) {
    double wsum = 0.0, acc = 0.0;
    for (int m = 0; m < n_mels; ++m) {
        const double w = mel_filter_weight(m, freq_hz, n_mels, sample_rate);
        if (w <= 0.0) continue;
        wsum += w;
        acc += w * std::exp(envelopes.at(frame, m));
    }
    if (wsum <= 0.0) return 0.0;
    return std::sqrt(acc / wsum);
}

double frame_target_rms(const Tensor& envelopes, int64_t frame, int n_mels, double cap) {
    double acc = 0.0;
    for (int m = 0; m < n_mels; ++m) acc += std::exp(envelopes.at(frame, m));
    return std::min(std::sqrt(acc / static_cast<double>(n_mels)), cap);
}

}  // namespace

std::vector<double> synthesize_frames(const std::vector<double>& f0_hz,
                                      const std::vector<bool>& voiced,
                                      const Tensor& mel_envelopes, const SynthesisConfig& cfg) {
    const int64_t frames = static_cast<int64_t>(f0_hz.size());
    if (frames == 0) throw std::invalid_argument("synthesize_frames: no frames");
    if (static_cast<int64_t>(voiced.size()) != frames ||
        mel_envelopes.rank() != 2 || mel_envelopes.shape[0] != frames)
        throw std::invalid_argument("synthesize_frames: per-frame inputs disagree in length");
    const int n_mels = static_cast<int>(mel_envelopes.shape[1]);
    const int64_t hop = static_cast<int64_t>(std::llround(cfg.hop_seconds * cfg.sample_rate));
    const int64_t total = frames * hop;

    // global filtered noise stream, unit RMS, so steady unvoiced stretches
    // reconstruct noise_gain * n[s] exactly through the overlap-add
    std::vector<double> noise(static_cast<size_t>(total + hop), 0.0);
    {
        core::Rng rng(cfg.noise_seed);
        double prev_x = 0.0, prev_y = 0.0;
        for (double& v : noise) {
            const double x = rng.gaussian();
            const double y = 0.95 * (prev_y + x - prev_x);  // one-pole high-pass
            prev_x = x;
            prev_y = y;
            v = y;
        }
        double rms = 0.0;
        for (double v : noise) rms += v * v;
        rms = std::sqrt(rms / static_cast<double>(noise.size()));
        if (rms > 1e-12)
            for (double& v : noise) v /= rms;
    }

    // running fundamental phase, advanced per sample from the frame's f0
    std::vector<double> phase(static_cast<size_t>(total + hop), 0.0);
    {
        double phi = 0.0;
        for (int64_t s = 0; s < total + hop; ++s) {
            phase[static_cast<size_t>(s)] = phi;
            const int64_t frame = std::min(s / hop, frames - 1);
            if (voiced[static_cast<size_t>(frame)])
                phi += kTwoPi * f0_hz[static_cast<size_t>(frame)] / cfg.sample_rate;
        }
    }

    std::vector<double> out(static_cast<size_t>(total + hop), 0.0);
    const int64_t win = 2 * hop;
    std::vector<double> window(static_cast<size_t>(win));
    for (int64_t i = 0; i < win; ++i)
        window[static_cast<size_t>(i)] =
            0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(win));

    for (int64_t t = -1; t < frames; ++t) {
        const int64_t props = std::clamp<int64_t>(t, 0, frames - 1);  // clamped frame properties
        const int64_t base = t * hop;
        const bool v = voiced[static_cast<size_t>(props)];
        double amps[128];
        int n_harm = 0;
        double gain = 1.0;
        if (v) {
            const double f0 = f0_hz[static_cast<size_t>(props)];
            n_harm = std::min<int>(std::min(cfg.max_harmonics, 128),
                                   static_cast<int>(0.45 * cfg.sample_rate / std::max(f0, 1.0)));
            double power = 0.0;
            for (int h = 1; h <= n_harm; ++h) {
                amps[h - 1] = envelope_amplitude(mel_envelopes, props, h * f0, n_mels,
                                                 cfg.sample_rate);
                power += 0.5 * amps[h - 1] * amps[h - 1];
            }
            const double target = frame_target_rms(mel_envelopes, props, n_mels, cfg.max_amplitude);
            gain = power > 1e-20 ? target / std::sqrt(power) : 0.0;
        }
        for (int64_t i = 0; i < win; ++i) {
            const int64_t s = base + i;
            if (s < 0 || s >= total) continue;
            double c;
            if (v) {
                double acc = 0.0;
                for (int h = 1; h <= n_harm; ++h)
                    acc += amps[h - 1] * std::sin(static_cast<double>(h) * phase[static_cast<size_t>(s)]);
                c = gain * acc;
            } else {
                c = cfg.noise_gain * noise[static_cast<size_t>(s)];
            }
            out[static_cast<size_t>(s)] += window[static_cast<size_t>(i)] * c;
        }
    }
    out.resize(static_cast<size_t>(total));
    return out;
}

std::vector<double> resynthesize(const UnitSeq& units, const std::string& singer,
                                 const KMeansModel& kmeans, F0Codec& f0_codec,
                                 const SynthesisConfig& cfg) {
    const int64_t ls = static_cast<int64_t>(units.semantic_ids.size());
    const int64_t lp = static_cast<int64_t>(units.pitch_ids.size());
    if (std::abs(ls - lp) > 1)
        throw std::invalid_argument("resynthesize: semantic/pitch length mismatch " +
                                    std::to_string(ls) + " vs " + std::to_string(lp));
    const int64_t frames = std::min(ls, lp);
    if (frames == 0) throw std::invalid_argument("resynthesize: empty unit sequence");

    std::vector<int32_t> pitch_ids(units.pitch_ids.begin(), units.pitch_ids.begin() + frames);
    const std::vector<double> f0 = f0_codec.decode_pitch(pitch_ids, singer);

    const int64_t n_mels = kmeans.centroids.shape[1];
    Tensor envelopes({frames, n_mels});
    std::vector<bool> voiced(static_cast<size_t>(frames), false);
    std::vector<double> f0_gated(static_cast<size_t>(frames), 0.0);
    for (int64_t t = 0; t < frames; ++t) {
        const int32_t unit = units.semantic_ids[static_cast<size_t>(t)];
        if (unit < 0 || unit >= kmeans.centroids.shape[0])
            throw std::out_of_range("resynthesize: semantic id " + std::to_string(unit) +
                                    " outside [0, " + std::to_string(kmeans.centroids.shape[0]) + ")");
        double mean_log = 0.0;
        for (int64_t m = 0; m < n_mels; ++m) {
            envelopes.at(t, m) = kmeans.centroids.at(unit, m);
            mean_log += kmeans.centroids.at(unit, m);
        }
        mean_log /= static_cast<double>(n_mels);
        const bool v = mean_log > cfg.voicing_energy_threshold && f0[static_cast<size_t>(t)] > 30.0 &&
                       f0[static_cast<size_t>(t)] < 1500.0;
        voiced[static_cast<size_t>(t)] = v;
        f0_gated[static_cast<size_t>(t)] = v ? f0[static_cast<size_t>(t)] : 0.0;
    }
    return synthesize_frames(f0_gated, voiced, envelopes, cfg);
}

}  // namespace vp::vocal
