#pragma once

#include <vector>

#include "vocapose/core/tensor.hpp"
#include "vocapose/vocal/types.hpp"

namespace vp::vocal {

struct FeatureConfig {
    double hop_seconds = 0.02;
    double window_seconds = 0.04;
    int n_mels = 40;
    double log_floor = 1e-10;  // on power; features are ln(max(power, floor))
};

// Triangular mel filterbank response of filter `index` at `freq_hz`
// (HTK mel scale). Exposed so tests can locate the bin covering a tone.
double mel_filter_weight(int index, double freq_hz, int n_mels, int sample_rate);

// floor(duration / hop) frames of n_mels log-mel energies. Deterministic.
// sample_rate must be one of 16000, 22050, 44100; audio must be nonempty.
core::Tensor extract_features(const std::vector<double>& audio, int sample_rate,
                              const FeatureConfig& cfg = {});

struct F0Config {
    double hop_seconds = 0.02;
    double window_seconds = 0.04;  // autocorrelation window
    double f0_min = 60.0;
    double f0_max = 500.0;
    double voicing_threshold = 0.5;   // normalized autocorrelation peak
    double rms_gate_dbfs = -40.0;
};

struct F0Track {
    std::vector<double> f0_hz;  // 0 where unvoiced
    std::vector<bool> voiced;
};

// Per-frame F0 by normalized autocorrelation with parabolic peak refinement.
// Voiced iff the peak is >= voicing_threshold and frame RMS clears the gate.
F0Track estimate_f0(const std::vector<double>& audio, int sample_rate, const F0Config& cfg = {});

// Full frame-synchronous analysis (features + F0 on the shared hop).
VocalAnalysis analyze(const std::vector<double>& audio, int sample_rate,
                      const FeatureConfig& fcfg = {}, const F0Config& pcfg = {});

}  // namespace vp::vocal
