#include "vocapose/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "vocapose/core/rng.hpp"

namespace vp::pipeline {

const char* segment_flag_name(SegmentFlag f) {
    switch (f) {
        case SegmentFlag::ok: return "ok";
        case SegmentFlag::under_length: return "under_length";
        case SegmentFlag::over_length: return "over_length";
    }
    return "?";
}

std::vector<Segment> segment(const std::vector<TimedLine>& lines, double min_s, double max_s) {
    if (min_s <= 0.0 || max_s <= min_s)
        throw std::invalid_argument("segment: need 0 < min_s < max_s");
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].start < lines[i - 1].end - 1e-9 || lines[i].end < lines[i].start)
            throw std::invalid_argument("segment: lines must be sorted and non-overlapping (line " +
                                        std::to_string(i) + ")");
    }
    std::vector<Segment> out;
    Segment cur;
    bool open = false;
    auto close = [&](bool at_end) {
        if (!open) return;
        const double span = cur.end - cur.start;
        if (span > max_s)
            cur.flag = SegmentFlag::over_length;
        else if (span < min_s)
            cur.flag = SegmentFlag::under_length;
        else
            cur.flag = SegmentFlag::ok;
        (void)at_end;
        out.push_back(cur);
        cur = Segment{};
        open = false;
    };
    for (size_t i = 0; i < lines.size(); ++i) {
        const TimedLine& line = lines[i];
        if (!open) {
            cur.start = line.start;
            cur.end = line.end;
            cur.line_indices = {i};
            open = true;
            if (cur.end - cur.start > max_s) close(false);  // oversized single line
            continue;
        }
        const double span_if_added = line.end - cur.start;
        if (cur.end - cur.start >= min_s || span_if_added > max_s) {
            close(false);
            --i;  // retry this line as the start of a fresh segment
            continue;
        }
        cur.end = line.end;
        cur.line_indices.push_back(i);
    }
    close(true);
    return out;
}

LoudnessResult normalize_loudness(const std::vector<double>& audio, double target_rms_dbfs) {
    if (audio.empty()) throw std::invalid_argument("normalize_loudness: empty audio");
    double energy = 0.0, peak = 0.0;
    for (double s : audio) {
        energy += s * s;
        peak = std::max(peak, std::abs(s));
    }
    const double rms = std::sqrt(energy / static_cast<double>(audio.size()));
    if (rms <= 0.0 || peak <= 0.0)
        throw std::invalid_argument("normalize_loudness: digital silence");
    const double target = std::pow(10.0, target_rms_dbfs / 20.0);
    LoudnessResult res;
    res.gain = target / rms;
    if (res.gain * peak > 1.0) {
        res.gain = 1.0 / peak;
        res.limited = true;
    }
    res.samples.resize(audio.size());
    for (size_t i = 0; i < audio.size(); ++i) res.samples[i] = audio[i] * res.gain;
    return res;
}

void write_manifest_jsonl(const std::string& path, const std::vector<ClipManifest>& clips) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const ClipManifest& c : clips) {
        nlohmann::json j;
        j["clip_id"] = c.clip_id;
        j["song_id"] = c.song_id;
        j["lyric"] = c.lyric;
        nlohmann::json times = nlohmann::json::array();
        for (const auto& [s, e] : c.lyric_line_times) times.push_back({s, e});
        j["lyric_line_times"] = std::move(times);
        j["audio_path"] = c.audio_path;
        if (!c.motion_path.empty()) j["motion_path"] = c.motion_path;
        j["singer_id"] = c.singer_id;
        j["split"] = c.split;
        out << j.dump() << "\n";
    }
}

std::vector<ClipManifest> read_manifest_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest: " + path);
    std::vector<ClipManifest> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        ClipManifest c;
        c.clip_id = j.at("clip_id").get<std::string>();
        c.song_id = j.at("song_id").get<std::string>();
        c.lyric = j.at("lyric").get<std::string>();
        for (const auto& t : j.at("lyric_line_times"))
            c.lyric_line_times.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
        double prev_end = -1e18;
        for (const auto& [s, e] : c.lyric_line_times) {
            if (s < prev_end - 1e-9 || e < s)
                throw std::runtime_error("manifest clip '" + c.clip_id +
                                         "': line times unsorted or overlapping");
            prev_end = e;
        }
        c.audio_path = j.at("audio_path").get<std::string>();
        c.motion_path = j.value("motion_path", "");
        c.singer_id = j.at("singer_id").get<std::string>();
        c.split = j.value("split", "");
        out.push_back(std::move(c));
    }
    return out;
}

std::map<std::string, std::string> make_splits(const std::vector<ClipManifest>& clips,
                                               const SplitRatios& ratios, uint64_t seed) {
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw std::invalid_argument("make_splits: ratios must sum to 1");
    std::vector<std::string> songs;
    for (const ClipManifest& c : clips) {
        bool seen = false;
        for (const std::string& s : songs) seen = seen || s == c.song_id;
        if (!seen) songs.push_back(c.song_id);
    }
    const int64_t s = static_cast<int64_t>(songs.size());
    if (s < 3)
        throw std::invalid_argument("make_splits: need at least 3 songs, got " + std::to_string(s));
    std::sort(songs.begin(), songs.end());  // input order must not matter
    core::Rng rng(seed);
    rng.shuffle(songs);
    const int64_t n_train = static_cast<int64_t>(std::floor(ratios.train * static_cast<double>(s)));
    const int64_t n_val = static_cast<int64_t>(std::floor(ratios.val * static_cast<double>(s)));
    std::map<std::string, std::string> assignment;
    for (int64_t i = 0; i < s; ++i) {
        const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        assignment[songs[static_cast<size_t>(i)]] = split;
    }
    return assignment;
}

void apply_splits(std::vector<ClipManifest>& clips, const SplitRatios& ratios, uint64_t seed) {
    const auto assignment = make_splits(clips, ratios, seed);
    for (ClipManifest& c : clips) c.split = assignment.at(c.song_id);
}

}  // namespace vp::pipeline
