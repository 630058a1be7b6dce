#pragma once

#include <string>
#include <vector>

namespace vp::vocal {

// 16-bit PCM mono WAV. Samples normalized to [-1, 1].
struct WavData {
    std::vector<double> samples;
    int sample_rate = 0;
};

WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate);

}  // namespace vp::vocal
