#include "vocapose/vocal/features.hpp"

#include <cmath>
#include <stdexcept>

#include "vocapose/core/fft.hpp"

namespace vp::vocal {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

void check_sample_rate(int sr) {
    if (sr != 16000 && sr != 22050 && sr != 44100)
        throw std::invalid_argument("unsupported sample rate " + std::to_string(sr) +
                                    " (expected 16000, 22050 or 44100)");
}

}  // namespace

double mel_filter_weight(int index, double freq_hz, int n_mels, int sample_rate) {
    const double mel_max = hz_to_mel(static_cast<double>(sample_rate) / 2.0);
    const double step = mel_max / static_cast<double>(n_mels + 1);
    const double left = step * static_cast<double>(index);
    const double center = step * static_cast<double>(index + 1);
    const double right = step * static_cast<double>(index + 2);
    const double m = hz_to_mel(freq_hz);
    if (m <= left || m >= right) return 0.0;
    return m <= center ? (m - left) / (center - left) : (right - m) / (right - center);
}

core::Tensor extract_features(const std::vector<double>& audio, int sample_rate,
                              const FeatureConfig& cfg) {
    if (audio.empty()) throw std::invalid_argument("extract_features: empty audio");
    check_sample_rate(sample_rate);
    const int64_t hop = static_cast<int64_t>(std::llround(cfg.hop_seconds * sample_rate));
    const int64_t win = static_cast<int64_t>(std::llround(cfg.window_seconds * sample_rate));
    if (hop < 1 || win < 1) throw std::invalid_argument("extract_features: hop/window too small");
    const int64_t frames = static_cast<int64_t>(audio.size()) / hop;
    if (frames < 1) throw std::invalid_argument("extract_features: audio shorter than one hop");
    const int64_t n_fft = core::next_pow2(win);

    // precompute filterbank weights over FFT bins
    const int64_t bins = n_fft / 2 + 1;
    core::Tensor fb({cfg.n_mels, bins});
    for (int m = 0; m < cfg.n_mels; ++m)
        for (int64_t b = 0; b < bins; ++b) {
            const double freq = static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
            fb.at(m, b) = mel_filter_weight(m, freq, cfg.n_mels, sample_rate);
        }

    core::Tensor out({frames, cfg.n_mels});
    std::vector<double> frame(static_cast<size_t>(win), 0.0);
    for (int64_t t = 0; t < frames; ++t) {
        const int64_t start = t * hop;
        for (int64_t i = 0; i < win; ++i) {
            const int64_t s = start + i;
            const double w = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                                                  static_cast<double>(win - 1));
            frame[static_cast<size_t>(i)] =
                s < static_cast<int64_t>(audio.size()) ? audio[static_cast<size_t>(s)] * w : 0.0;
        }
        const std::vector<double> mag = core::magnitude_spectrum(frame.data(), win, n_fft);
        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            for (int64_t b = 0; b < bins; ++b) {
                const double p = mag[static_cast<size_t>(b)] * mag[static_cast<size_t>(b)];
                acc += fb.at(m, b) * p;
            }
            out.at(t, m) = std::log(std::max(acc, cfg.log_floor));
        }
    }
    return out;
}

F0Track estimate_f0(const std::vector<double>& audio, int sample_rate, const F0Config& cfg) {
    if (audio.empty()) throw std::invalid_argument("estimate_f0: empty audio");
    check_sample_rate(sample_rate);
    if (cfg.f0_min >= cfg.f0_max)
        throw std::invalid_argument("estimate_f0: f0_min " + std::to_string(cfg.f0_min) +
                                    " must be below f0_max " + std::to_string(cfg.f0_max));
    const int64_t hop = static_cast<int64_t>(std::llround(cfg.hop_seconds * sample_rate));
    const int64_t win = static_cast<int64_t>(std::llround(cfg.window_seconds * sample_rate));
    const int64_t frames = static_cast<int64_t>(audio.size()) / hop;
    const int64_t lag_min = std::max<int64_t>(2, static_cast<int64_t>(sample_rate / cfg.f0_max));
    const int64_t lag_max =
        std::min<int64_t>(win - 2, static_cast<int64_t>(sample_rate / cfg.f0_min));
    if (lag_max <= lag_min)
        throw std::invalid_argument("estimate_f0: window too short for the f0 range");
    const double rms_gate = std::pow(10.0, cfg.rms_gate_dbfs / 20.0);

    F0Track track;
    track.f0_hz.assign(static_cast<size_t>(frames), 0.0);
    track.voiced.assign(static_cast<size_t>(frames), false);

    std::vector<double> x(static_cast<size_t>(win));
    std::vector<double> r(static_cast<size_t>(lag_max + 2), 0.0);
    for (int64_t t = 0; t < frames; ++t) {
        const int64_t start = t * hop;
        double mean = 0.0;
        int64_t present = 0;
        for (int64_t i = 0; i < win; ++i) {
            const int64_t s = start + i;
            x[static_cast<size_t>(i)] = s < static_cast<int64_t>(audio.size())
                                            ? audio[static_cast<size_t>(s)]
                                            : 0.0;
            mean += x[static_cast<size_t>(i)];
            if (s < static_cast<int64_t>(audio.size())) ++present;
        }
        mean /= static_cast<double>(win);
        double energy = 0.0;
        for (int64_t i = 0; i < win; ++i) {
            x[static_cast<size_t>(i)] -= mean;
            energy += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        }
        const double rms = std::sqrt(energy / static_cast<double>(win));
        if (rms < rms_gate || present < win / 2) continue;

        // normalized autocorrelation over the valid overlap
        for (int64_t lag = lag_min - 1; lag <= std::min(lag_max + 1, win - 1); ++lag) {
            double num = 0.0, e0 = 0.0, e1 = 0.0;
            const int64_t n = win - lag;
            for (int64_t i = 0; i < n; ++i) {
                num += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i + lag)];
                e0 += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
                e1 += x[static_cast<size_t>(i + lag)] * x[static_cast<size_t>(i + lag)];
            }
            const double denom = std::sqrt(e0 * e1);
            r[static_cast<size_t>(lag)] = denom > 1e-12 ? num / denom : 0.0;
        }

        double r_max = 0.0;
        for (int64_t lag = lag_min; lag <= lag_max; ++lag)
            r_max = std::max(r_max, r[static_cast<size_t>(lag)]);
        if (r_max < cfg.voicing_threshold) continue;

        // smallest local maximum close to the global one beats octave-down errors
        int64_t best = -1;
        for (int64_t lag = lag_min; lag <= lag_max; ++lag) {
            const double v = r[static_cast<size_t>(lag)];
            if (v >= 0.9 * r_max && v >= r[static_cast<size_t>(lag - 1)] &&
                v >= r[static_cast<size_t>(lag + 1)]) {
                best = lag;
                break;
            }
        }
        if (best < 0) continue;

        double refined = static_cast<double>(best);
        const double rm = r[static_cast<size_t>(best - 1)], r0 = r[static_cast<size_t>(best)],
                     rp = r[static_cast<size_t>(best + 1)];
        const double denom = rm - 2.0 * r0 + rp;
        if (std::abs(denom) > 1e-12) {
            const double delta = 0.5 * (rm - rp) / denom;
            if (std::abs(delta) <= 1.0) refined += delta;
        }
        const double f0 = static_cast<double>(sample_rate) / refined;
        if (f0 < cfg.f0_min || f0 > cfg.f0_max) continue;
        track.f0_hz[static_cast<size_t>(t)] = f0;
        track.voiced[static_cast<size_t>(t)] = true;
    }
    return track;
}

VocalAnalysis analyze(const std::vector<double>& audio, int sample_rate, const FeatureConfig& fcfg,
                      const F0Config& pcfg) {
    if (fcfg.hop_seconds != pcfg.hop_seconds)
        throw std::invalid_argument("analyze: feature and f0 hops must match (shared hop)");
    VocalAnalysis out;
    out.features = extract_features(audio, sample_rate, fcfg);
    F0Track track = estimate_f0(audio, sample_rate, pcfg);
    out.f0_hz = std::move(track.f0_hz);
    out.voiced = std::move(track.voiced);
    out.hop_seconds = fcfg.hop_seconds;
    out.sample_rate = sample_rate;
    return out;
}

}  // namespace vp::vocal
