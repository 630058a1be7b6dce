#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace vp::pipeline {

struct TimedLine {
    double start = 0.0;
    double end = 0.0;
    std::string text;
};

enum class SegmentFlag { ok, under_length, over_length };
const char* segment_flag_name(SegmentFlag f);

struct Segment {
    double start = 0.0;
    double end = 0.0;
    std::vector<size_t> line_indices;  // into the input line list, in order
    SegmentFlag flag = SegmentFlag::ok;
};

// Greedy accumulation: extend while the span is under min_s, close before
// exceeding max_s, never split a line. A single line longer than max_s
// becomes its own over_length segment; a trailing short segment is flagged
// under_length.
std::vector<Segment> segment(const std::vector<TimedLine>& lines, double min_s = 10.0,
                             double max_s = 20.0);

struct LoudnessResult {
    std::vector<double> samples;
    double gain = 1.0;
    bool limited = false;  // gain was capped to keep |sample| <= 1
};

// Uniform gain to the target RMS; rejects digital silence.
LoudnessResult normalize_loudness(const std::vector<double>& audio, double target_rms_dbfs = -20.0);

struct ClipManifest {
    std::string clip_id;
    std::string song_id;
    std::string lyric;
    std::vector<std::pair<double, double>> lyric_line_times;  // seconds, clip-relative
    std::string audio_path;
    std::string motion_path;  // empty when the clip has no motion
    std::string singer_id;
    std::string split;  // train | val | test
};

void write_manifest_jsonl(const std::string& path, const std::vector<ClipManifest>& clips);
std::vector<ClipManifest> read_manifest_jsonl(const std::string& path);

struct SplitRatios {
    double train = 0.85;
    double val = 0.075;
    double test = 0.075;
};

// Deterministic song-level assignment: seeded shuffle of the distinct songs,
// then contiguous blocks of floor(train*S) / floor(val*S) / remainder. Every
// clip of a song lands in the same split. Needs at least 3 songs.
std::map<std::string, std::string> make_splits(const std::vector<ClipManifest>& clips,
                                               const SplitRatios& ratios, uint64_t seed);
void apply_splits(std::vector<ClipManifest>& clips, const SplitRatios& ratios, uint64_t seed);

}  // namespace vp::pipeline
