#pragma once

#include <string>
#include <vector>

#include "vocapose/motion/types.hpp"
#include "vocapose/pipeline/pipeline.hpp"

namespace vp::pipeline {

// Synthetic stand-in corpus: harmonic "vocals" with a known F0 contour and
// percussive bursts on a fixed beat grid, plus motion whose mean joint speed
// follows sin^2(pi t / beat_period), so velocity minima land exactly on the
// beats. Everything derives from the seed.
struct FixtureConfig {
    int64_t songs = 12;
    int64_t lines_per_song = 8;
    double line_seconds = 4.0;
    int sample_rate = 16000;
    double fps = 20.0;
    int64_t singers = 3;
    uint64_t seed = 1;
};

struct FixtureSong {
    std::string song_id;
    std::string singer_id;
    std::vector<TimedLine> lines;
    std::vector<double> audio;
    motion::MotionSequence motion;
    double beat_period = 0.5;
    // analytic truth on the 20 ms analysis hop
    std::vector<double> f0_truth;
    std::vector<bool> voiced_truth;
};

FixtureSong make_fixture_song(int64_t index, const FixtureConfig& cfg);

struct BuildConfig {
    FixtureConfig fixture;
    std::string out_dir;
    SplitRatios ratios;
    uint64_t seed = 1;
};

struct BuiltDataset {
    std::string manifest_path;
    std::vector<ClipManifest> clips;
};

// Generates the fixture corpus, segments each song, writes per-clip WAV +
// motion files with loudness-normalized audio, assigns song-level splits and
// writes the manifest.
BuiltDataset dataset_build(const BuildConfig& cfg);

}  // namespace vp::pipeline
