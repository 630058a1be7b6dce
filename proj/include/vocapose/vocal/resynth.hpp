#pragma once

#include <vector>

#include "vocapose/core/tensor.hpp"
#include "vocapose/vocal/f0_codec.hpp"
#include "vocapose/vocal/kmeans.hpp"
#include "vocapose/vocal/types.hpp"

namespace vp::vocal {

struct SynthesisConfig {
    int sample_rate = 16000;
    double hop_seconds = 0.02;
    double noise_gain = 0.05;
    // mean log-mel power above which a frame's centroid counts as voiced
    double voicing_energy_threshold = -18.0;
    int max_harmonics = 40;
    double max_amplitude = 0.5;
    uint64_t noise_seed = 1234;
};

// Deterministic harmonic resynthesis: per-frame F0 drives a phase-coherent
// oscillator bank shaped by the mel envelope; unvoiced frames pass filtered
// noise at noise_gain; frames cross-fade by Hann overlap-add at hop
// boundaries. mel_envelopes is [frames, n_mels] log power.
std::vector<double> synthesize_frames(const std::vector<double>& f0_hz,
                                      const std::vector<bool>& voiced,
                                      const core::Tensor& mel_envelopes,
                                      const SynthesisConfig& cfg);

// Units -> audio. Envelope per frame comes from the semantic centroid, pitch
// from the decoded F0 contour; a frame is voiced when its centroid carries
// energy above the threshold. semantic/pitch lengths may differ by at most
// one frame (truncated to the shorter).
std::vector<double> resynthesize(const UnitSeq& units, const std::string& singer,
                                 const KMeansModel& kmeans, F0Codec& f0_codec,
                                 const SynthesisConfig& cfg = {});

}  // namespace vp::vocal
