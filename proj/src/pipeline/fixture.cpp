#include "vocapose/pipeline/fixture.hpp"

#include <cmath>
#include <filesystem>

#include "vocapose/core/rng.hpp"
#include "vocapose/vocal/wav.hpp"

namespace vp::pipeline {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVoicedGap = 0.25;  // unvoiced tail of each line, seconds

const char* kWords[] = {"flow", "verse", "beat", "rhyme", "echo", "drift", "spark",
                        "wave", "stone", "glide", "nova", "ember", "shade", "pulse"};

// integral of sin^2(pi t / p): t/2 - p sin(2 pi t / p) / (4 pi)
double speed_integral(double t, double p) {
    return 0.5 * t - p * std::sin(2.0 * kPi * t / p) / (4.0 * kPi);
}

}  // namespace

FixtureSong make_fixture_song(int64_t index, const FixtureConfig& cfg) {
    core::Rng rng(cfg.seed * 1000003ull + static_cast<uint64_t>(index) * 7919ull + 17ull);
    FixtureSong song;
    song.song_id = "song" + std::to_string(index);
    song.singer_id = "singer" + std::to_string(index % cfg.singers);
    song.beat_period = 0.45 + 0.15 * rng.uniform();
    const double duration = static_cast<double>(cfg.lines_per_song) * cfg.line_seconds;
    const int64_t n_samples = static_cast<int64_t>(duration * cfg.sample_rate);

    // lyric lines on a fixed grid
    for (int64_t i = 0; i < cfg.lines_per_song; ++i) {
        TimedLine line;
        line.start = static_cast<double>(i) * cfg.line_seconds;
        line.end = line.start + cfg.line_seconds;
        const int words = 3 + static_cast<int>(rng.below(4));
        for (int w = 0; w < words; ++w) {
            if (w) line.text += " ";
            line.text += kWords[rng.below(std::size(kWords))];
        }
        song.lines.push_back(std::move(line));
    }

    // vocal: harmonic tone with a slowly wobbling F0, silent in the last
    // kVoicedGap of every line; percussive bursts on the beat grid
    const double f_base = 130.0 + 120.0 * rng.uniform();
    const double wobble = 0.08 + 0.08 * rng.uniform();
    const double wobble_period = 1.5 + rng.uniform();
    auto f0_at = [&](double t) {
        return f_base * (1.0 + wobble * std::sin(2.0 * kPi * t / wobble_period));
    };
    auto voiced_at = [&](double t) {
        const double in_line = std::fmod(t, cfg.line_seconds);
        return in_line < cfg.line_seconds - kVoicedGap;
    };

    song.audio.assign(static_cast<size_t>(n_samples), 0.0);
    double phase = 0.0;
    for (int64_t s = 0; s < n_samples; ++s) {
        const double t = static_cast<double>(s) / cfg.sample_rate;
        if (voiced_at(t)) {
            phase += 2.0 * kPi * f0_at(t) / cfg.sample_rate;
            double v = 0.0;
            for (int h = 1; h <= 5; ++h)
                v += std::sin(static_cast<double>(h) * phase) / static_cast<double>(h * h);
            song.audio[static_cast<size_t>(s)] = 0.22 * v;
        }
    }
    for (double tb = song.beat_period; tb < duration - 0.05; tb += song.beat_period) {
        const int64_t start = static_cast<int64_t>(tb * cfg.sample_rate);
        for (int64_t i = 0; i < cfg.sample_rate / 50 && start + i < n_samples; ++i) {
            const double env = std::exp(-static_cast<double>(i) / (cfg.sample_rate / 400.0));
            song.audio[static_cast<size_t>(start + i)] += 0.35 * env * rng.gaussian() * 0.5;
        }
    }

    // analytic truth at the 20 ms hop (window-centered, matching the estimator)
    const double hop = 0.02;
    const int64_t frames = static_cast<int64_t>(duration / hop);
    for (int64_t i = 0; i < frames; ++i) {
        const double t_center = static_cast<double>(i) * hop + 0.02;
        const bool v = voiced_at(t_center) && voiced_at(t_center - 0.02) && voiced_at(t_center + 0.02);
        song.voiced_truth.push_back(v);
        song.f0_truth.push_back(v ? f0_at(t_center) : 0.0);
    }

    // motion: speed profile sin^2(pi t / P) on every moving column, direction
    // flipping each beat, slow per-column wander on top
    const int64_t n_frames = static_cast<int64_t>(duration * cfg.fps);
    core::Tensor pose({n_frames, motion::kFrameDim});
    std::vector<double> amp(static_cast<size_t>(motion::kFrameDim));
    std::vector<double> wander_f(static_cast<size_t>(motion::kFrameDim));
    std::vector<double> wander_p(static_cast<size_t>(motion::kFrameDim));
    std::vector<double> offset(static_cast<size_t>(motion::kFrameDim));
    for (int64_t j = 0; j < motion::kFrameDim; ++j) {
        amp[static_cast<size_t>(j)] = 0.01 + 0.03 * rng.uniform();
        wander_f[static_cast<size_t>(j)] = 0.05 + 0.25 * rng.uniform();
        wander_p[static_cast<size_t>(j)] = rng.uniform() * 2.0 * kPi;
        offset[static_cast<size_t>(j)] = 0.2 * rng.gaussian();
    }
    for (int64_t i = 0; i < n_frames; ++i) {
        const double t = static_cast<double>(i) / cfg.fps;
        const int64_t beat_idx = static_cast<int64_t>(t / song.beat_period);
        const double progress =
            speed_integral(t - static_cast<double>(beat_idx) * song.beat_period, song.beat_period);
        // alternate direction per beat: position folds back and forth
        const double swing = (beat_idx % 2 == 0)
                                 ? progress
                                 : speed_integral(song.beat_period, song.beat_period) - progress;
        for (int64_t j = 0; j < motion::kFrameDim; ++j) {
            const bool expressive = j >= motion::kExprOffset && j < motion::kExprOffset + motion::kExprDim;
            const double wander =
                0.002 * std::sin(2.0 * kPi * wander_f[static_cast<size_t>(j)] * t +
                                 wander_p[static_cast<size_t>(j)]);
            if (expressive) {
                pose.at(i, j) = offset[static_cast<size_t>(j)] * 0.05 +
                                0.05 * std::sin(2.0 * kPi * 0.4 * t + wander_p[static_cast<size_t>(j)]);
            } else {
                pose.at(i, j) =
                    offset[static_cast<size_t>(j)] * 0.01 + amp[static_cast<size_t>(j)] * swing + wander;
            }
        }
    }
    song.motion = motion::MotionSequence(std::move(pose), cfg.fps);
    return song;
}

BuiltDataset dataset_build(const BuildConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.out_dir.empty()) throw std::invalid_argument("dataset_build: out_dir required");
    fs::create_directories(fs::path(cfg.out_dir) / "audio");
    fs::create_directories(fs::path(cfg.out_dir) / "motion");

    BuiltDataset built;
    for (int64_t s = 0; s < cfg.fixture.songs; ++s) {
        FixtureSong song = make_fixture_song(s, cfg.fixture);
        const std::vector<Segment> segments = segment(song.lines);
        for (size_t g = 0; g < segments.size(); ++g) {
            const Segment& seg = segments[g];
            ClipManifest clip;
            clip.clip_id = song.song_id + "_seg" + std::to_string(g);
            clip.song_id = song.song_id;
            clip.singer_id = song.singer_id;
            for (size_t li : seg.line_indices) {
                if (!clip.lyric.empty()) clip.lyric += " ";
                clip.lyric += song.lines[li].text;
                clip.lyric_line_times.emplace_back(song.lines[li].start - seg.start,
                                                   song.lines[li].end - seg.start);
            }

            const int64_t s0 = static_cast<int64_t>(seg.start * cfg.fixture.sample_rate);
            const int64_t s1 = std::min<int64_t>(static_cast<int64_t>(seg.end * cfg.fixture.sample_rate),
                                                 static_cast<int64_t>(song.audio.size()));
            std::vector<double> clip_audio(song.audio.begin() + s0, song.audio.begin() + s1);
            LoudnessResult normalized = normalize_loudness(clip_audio);
            const std::string wav_path =
                (fs::path(cfg.out_dir) / "audio" / (clip.clip_id + ".wav")).string();
            vocal::write_wav(wav_path, normalized.samples, cfg.fixture.sample_rate);
            clip.audio_path = wav_path;

            const int64_t f0 = static_cast<int64_t>(seg.start * cfg.fixture.fps);
            const int64_t f1 = std::min<int64_t>(static_cast<int64_t>(seg.end * cfg.fixture.fps),
                                                 song.motion.length());
            core::Tensor frames({f1 - f0, motion::kFrameDim});
            std::copy_n(song.motion.frames.data.begin() + f0 * motion::kFrameDim,
                        (f1 - f0) * motion::kFrameDim, frames.data.begin());
            const std::string motion_path =
                (fs::path(cfg.out_dir) / "motion" / (clip.clip_id + ".motion")).string();
            motion::write_motion_file(motion_path,
                                      motion::MotionSequence(std::move(frames), cfg.fixture.fps));
            clip.motion_path = motion_path;

            built.clips.push_back(std::move(clip));
        }
    }
    apply_splits(built.clips, cfg.ratios, cfg.seed);
    built.manifest_path = (fs::path(cfg.out_dir) / "manifest.jsonl").string();
    write_manifest_jsonl(built.manifest_path, built.clips);
    return built;
}

}  // namespace vp::pipeline
