#include "vocapose/vocal/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vp::vocal {

namespace {
uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint16_t read_u16(std::ifstream& in) {
    uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}
}  // namespace

WavData read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav: " + path);
    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("not a RIFF file: " + path);
    read_u32(in);  // riff size
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("not a WAVE file: " + path);

    WavData wav;
    uint16_t channels = 0, bits = 0;
    bool got_fmt = false;
    while (in.read(tag, 4)) {
        const uint32_t size = read_u32(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            const uint16_t format = read_u16(in);
            channels = read_u16(in);
            wav.sample_rate = static_cast<int>(read_u32(in));
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            if (format != 1) throw std::runtime_error("wav is not PCM (format " +
                                                      std::to_string(format) + "): " + path);
            got_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!got_fmt) throw std::runtime_error("wav data chunk before fmt: " + path);
            if (channels != 1)
                throw std::runtime_error("expected mono wav, got " + std::to_string(channels) +
                                         " channels: " + path);
            if (bits != 16)
                throw std::runtime_error("expected 16-bit wav, got " + std::to_string(bits) +
                                         " bits: " + path);
            const size_t n = size / 2;
            std::vector<int16_t> raw(n);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
            if (!in) throw std::runtime_error("truncated wav data: " + path);
            wav.samples.resize(n);
            for (size_t i = 0; i < n; ++i) wav.samples[i] = static_cast<double>(raw[i]) / 32768.0;
            return wav;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    throw std::runtime_error("wav has no data chunk: " + path);
}

void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
    if (sample_rate <= 0) throw std::invalid_argument("write_wav: bad sample rate");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open wav for writing: " + path);
    const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);  // PCM
    u16(1);  // mono
    u32(static_cast<uint32_t>(sample_rate));
    u32(static_cast<uint32_t>(sample_rate * 2));
    u16(2);
    u16(16);
    out.write("data", 4);
    u32(data_size);
    for (double s : samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        const int16_t v = static_cast<int16_t>(std::lround(clamped * 32767.0));
        out.write(reinterpret_cast<const char*>(&v), 2);
    }
    if (!out) throw std::runtime_error("failed writing wav: " + path);
}

}  // namespace vp::vocal
