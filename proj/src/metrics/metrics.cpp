#include "vocapose/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "vocapose/core/fft.hpp"
#include "vocapose/metrics/linalg.hpp"

namespace vp::metrics {

using core::Tensor;

// ---------------------------------------------------------------- features

namespace {
void mean_and_cov(const Tensor& rows, std::vector<double>& mu, Tensor& cov) {
    const int64_t n = rows.shape[0], f = rows.shape[1];
    mu.assign(static_cast<size_t>(f), 0.0);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < f; ++j) mu[static_cast<size_t>(j)] += rows.at(i, j);
    for (double& m : mu) m /= static_cast<double>(n);
    cov = Tensor({f, f});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t a = 0; a < f; ++a) {
            const double da = rows.at(i, a) - mu[static_cast<size_t>(a)];
            for (int64_t b = 0; b < f; ++b)
                cov.at(a, b) += da * (rows.at(i, b) - mu[static_cast<size_t>(b)]);
        }
    for (double& x : cov.data) x /= static_cast<double>(n - 1);
}
}  // namespace

double fid(const FeatureSet& real, const FeatureSet& gen) {
    if (real.rows.rank() != 2 || gen.rows.rank() != 2)
        throw core::ShapeError("fid", "feature sets must be [N, F] matrices");
    if (real.rows.shape[1] != gen.rows.shape[1])
        throw core::ShapeError("fid", real.rows.shape, gen.rows.shape);
    if (real.rows.shape[0] < 2 || gen.rows.shape[0] < 2)
        throw std::invalid_argument("fid: need at least 2 rows per set for covariance");
    core::check_finite("fid real", real.rows);
    core::check_finite("fid gen", gen.rows);

    std::vector<double> mu_r, mu_g;
    Tensor cov_r, cov_g;
    mean_and_cov(real.rows, mu_r, cov_r);
    mean_and_cov(gen.rows, mu_g, cov_g);

    double mean_term = 0.0;
    for (size_t j = 0; j < mu_r.size(); ++j) {
        const double d = mu_r[j] - mu_g[j];
        mean_term += d * d;
    }
    double tr = 0.0;
    for (int64_t i = 0; i < cov_r.shape[0]; ++i) tr += cov_r.at(i, i) + cov_g.at(i, i);
    const double cross = trace_sqrt_product(cov_r, cov_g);
    return mean_term + tr - 2.0 * cross;
}

const char* diversity_mode_name(DiversityMode mode) {
    return mode == DiversityMode::from_mean ? "from_mean" : "pairwise";
}

double diversity(const FeatureSet& gen, DiversityMode mode) {
    if (gen.rows.rank() != 2 || gen.rows.shape[0] < 2)
        throw std::invalid_argument("diversity: need at least 2 feature rows");
    const int64_t n = gen.rows.shape[0], f = gen.rows.shape[1];
    if (mode == DiversityMode::from_mean) {
        std::vector<double> mu(static_cast<size_t>(f), 0.0);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < f; ++j) mu[static_cast<size_t>(j)] += gen.rows.at(i, j);
        for (double& m : mu) m /= static_cast<double>(n);
        double acc = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (int64_t j = 0; j < f; ++j) {
                const double d = gen.rows.at(i, j) - mu[static_cast<size_t>(j)];
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        return acc / static_cast<double>(n);
    }
    double acc = 0.0;
    int64_t pairs = 0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t k = i + 1; k < n; ++k) {
            double d2 = 0.0;
            for (int64_t j = 0; j < f; ++j) {
                const double d = gen.rows.at(i, j) - gen.rows.at(k, j);
                d2 += d * d;
            }
            acc += std::sqrt(d2);
            ++pairs;
        }
    return acc / static_cast<double>(pairs);
}

// ---------------------------------------------------------------- beats

double beat_alignment_score(const BeatSet& motion_beats, const BeatSet& audio_beats, double sigma) {
    if (audio_beats.times.empty()) throw std::invalid_argument("beat score: no audio beats");
    if (motion_beats.times.empty()) throw std::invalid_argument("beat score: no motion beats");
    const double two_sigma2 = 2.0 * sigma * sigma;
    double acc = 0.0;
    for (double b : motion_beats.times) {
        double best = std::numeric_limits<double>::infinity();
        for (double a : audio_beats.times) best = std::min(best, (b - a) * (b - a));
        acc += std::exp(-best / two_sigma2);
    }
    return acc / static_cast<double>(motion_beats.times.size());
}

BeatSet audio_beats_from_samples(const std::vector<double>& audio, int sample_rate) {
    if (audio.empty()) throw std::invalid_argument("audio beats: empty audio");
    if (sample_rate <= 0) throw std::invalid_argument("audio beats: bad sample rate");
    const int64_t win = core::next_pow2(static_cast<int64_t>(0.05 * sample_rate));
    const int64_t hop = win / 4;
    const int64_t n = static_cast<int64_t>(audio.size());
    const int64_t frames = n >= win ? (n - win) / hop + 1 : 0;
    BeatSet beats;
    if (frames < 3) return beats;

    std::vector<double> flux(static_cast<size_t>(frames), 0.0);
    std::vector<double> prev_mag;
    std::vector<double> frame(static_cast<size_t>(win));
    for (int64_t t = 0; t < frames; ++t) {
        for (int64_t i = 0; i < win; ++i) {
            // Hann window
            const double w = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 *
                                                  static_cast<double>(i) / static_cast<double>(win - 1));
            frame[static_cast<size_t>(i)] = audio[static_cast<size_t>(t * hop + i)] * w;
        }
        std::vector<double> mag = core::magnitude_spectrum(frame.data(), win, win);
        if (!prev_mag.empty()) {
            double f = 0.0;
            for (size_t i = 0; i < mag.size(); ++i) f += std::max(0.0, mag[i] - prev_mag[i]);
            flux[static_cast<size_t>(t)] = f;
        }
        prev_mag = std::move(mag);
    }

    double mean = 0.0;
    for (double f : flux) mean += f;
    mean /= static_cast<double>(frames);
    double var = 0.0;
    for (double f : flux) var += (f - mean) * (f - mean);
    const double threshold = mean + std::sqrt(var / static_cast<double>(frames));

    for (int64_t t = 1; t + 1 < frames; ++t) {
        const double f = flux[static_cast<size_t>(t)];
        if (f > threshold && f > flux[static_cast<size_t>(t - 1)] &&
            f >= flux[static_cast<size_t>(t + 1)]) {
            beats.times.push_back(static_cast<double>(t * hop + win / 2) /
                                  static_cast<double>(sample_rate));
        }
    }
    return beats;
}

namespace {
std::vector<double> mean_joint_speed(const LandmarkSeq& joints) {
    const int64_t t = joints.frames(), p = joints.points();
    std::vector<double> speed(static_cast<size_t>(std::max<int64_t>(t - 1, 0)), 0.0);
    for (int64_t i = 0; i + 1 < t; ++i) {
        double acc = 0.0;
        for (int64_t j = 0; j < p; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = joints.at(i + 1, j, c) - joints.at(i, j, c);
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        speed[static_cast<size_t>(i)] = acc / static_cast<double>(p) * joints.fps;
    }
    return speed;
}
}  // namespace

BeatSet kinematic_beats(const motion::MotionSequence& seq) {
    const LandmarkSeq joints = joints_from_motion(seq);
    const std::vector<double> speed = mean_joint_speed(joints);
    BeatSet beats;
    if (speed.size() < 3) return beats;
    double lo = speed[0], hi = speed[0];
    for (double s : speed) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const double min_prominence = 0.1 * (hi - lo);
    const int64_t n = static_cast<int64_t>(speed.size());
    for (int64_t i = 1; i + 1 < n; ++i) {
        if (!(speed[static_cast<size_t>(i)] < speed[static_cast<size_t>(i - 1)] &&
              speed[static_cast<size_t>(i)] <= speed[static_cast<size_t>(i + 1)]))
            continue;
        double left = speed[static_cast<size_t>(i)];
        for (int64_t j = i - 1; j >= 0 && speed[static_cast<size_t>(j)] >= speed[static_cast<size_t>(i)]; --j)
            left = std::max(left, speed[static_cast<size_t>(j)]);
        double right = speed[static_cast<size_t>(i)];
        for (int64_t j = i + 1; j < n && speed[static_cast<size_t>(j)] >= speed[static_cast<size_t>(i)]; ++j)
            right = std::max(right, speed[static_cast<size_t>(j)]);
        const double prominence = std::min(left, right) - speed[static_cast<size_t>(i)];
        if (prominence >= min_prominence)
            beats.times.push_back((static_cast<double>(i) + 0.5) / seq.fps);
    }
    return beats;
}

BeatConstancyResult beat_constancy(const motion::MotionSequence& seq,
                                   const std::vector<double>& audio, int sample_rate, double sigma) {
    if (audio.empty()) throw std::invalid_argument("beat_constancy: empty audio");
    BeatConstancyResult res;
    res.audio_beats = audio_beats_from_samples(audio, sample_rate);
    if (res.audio_beats.times.empty())
        throw std::invalid_argument("beat_constancy: no audio beats detected");
    res.motion_beats = kinematic_beats(seq);
    if (res.motion_beats.times.empty()) return res;  // undefined, reported as such
    res.bc = beat_alignment_score(res.motion_beats, res.audio_beats, sigma);
    res.defined = true;
    return res;
}

// ---------------------------------------------------------------- landmarks

namespace {
void check_landmark_pair(const char* where, const LandmarkSeq& a, const LandmarkSeq& b) {
    if (a.positions.shape != b.positions.shape)
        throw core::ShapeError(where, a.positions.shape, b.positions.shape);
    if (a.fps != b.fps)
        throw std::invalid_argument(std::string(where) + ": fps mismatch " + std::to_string(a.fps) +
                                    " vs " + std::to_string(b.fps));
    if (a.frames() < 1 || a.points() < 1)
        throw std::invalid_argument(std::string(where) + ": empty landmark sequence");
}
}  // namespace

double lip_mse(const LandmarkSeq& gen, const LandmarkSeq& gt,
               const std::vector<int64_t>& lip_indices) {
    check_landmark_pair("lip_mse", gen, gt);
    if (lip_indices.empty()) throw std::invalid_argument("lip_mse: no lip indices");
    for (int64_t p : lip_indices)
        if (p < 0 || p >= gen.points())
            throw std::out_of_range("lip_mse: lip index " + std::to_string(p) + " outside [0, " +
                                    std::to_string(gen.points()) + ")");
    double acc = 0.0;
    for (int64_t t = 0; t < gen.frames(); ++t)
        for (int64_t p : lip_indices) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = gen.at(t, p, c) - gt.at(t, p, c);
                d2 += d * d;
            }
            acc += d2;
        }
    return acc / static_cast<double>(gen.frames() * static_cast<int64_t>(lip_indices.size()));
}

double lvd(const LandmarkSeq& gen, const LandmarkSeq& gt) {
    check_landmark_pair("lvd", gen, gt);
    if (gen.frames() < 2) throw std::invalid_argument("lvd: need at least 2 frames");
    double acc = 0.0;
    for (int64_t t = 0; t + 1 < gen.frames(); ++t)
        for (int64_t p = 0; p < gen.points(); ++p) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double vg = (gen.at(t + 1, p, c) - gen.at(t, p, c)) * gen.fps;
                const double vt = (gt.at(t + 1, p, c) - gt.at(t, p, c)) * gt.fps;
                d2 += (vg - vt) * (vg - vt);
            }
            acc += std::sqrt(d2);
        }
    return acc / static_cast<double>((gen.frames() - 1) * gen.points());
}

LandmarkSeq joints_from_motion(const motion::MotionSequence& seq) {
    const int64_t t = seq.length();
    constexpr int64_t joints = (motion::kJawDim + motion::kBodyDim + motion::kHandDim +
                                motion::kTransDim) / 3;  // 53
    LandmarkSeq out;
    out.fps = seq.fps;
    out.positions = Tensor({t, joints, 3});
    const std::pair<int64_t, int64_t> pieces[] = {{motion::kJawOffset, motion::kJawDim},
                                                  {motion::kBodyOffset, motion::kBodyDim},
                                                  {motion::kHandOffset, motion::kHandDim},
                                                  {motion::kTransOffset, motion::kTransDim}};
    for (int64_t i = 0; i < t; ++i) {
        int64_t joint = 0, coord = 0;
        for (auto [off, width] : pieces) {
            for (int64_t j = 0; j < width; ++j) {
                out.at(i, joint, coord) = seq.frames.at(i, off + j) * 1000.0;  // meters -> mm
                if (++coord == 3) {
                    coord = 0;
                    ++joint;
                }
            }
        }
    }
    return out;
}

ReconstructionErrors landmark_reconstruction(const LandmarkSeq& gen, const LandmarkSeq& gt) {
    check_landmark_pair("motion_reconstruction", gen, gt);
    const int64_t t = gen.frames(), p = gen.points();
    ReconstructionErrors errs;

    double mpjpe = 0.0;
    for (int64_t i = 0; i < t; ++i)
        for (int64_t j = 0; j < p; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = gen.at(i, j, c) - gt.at(i, j, c);
                d2 += d * d;
            }
            mpjpe += std::sqrt(d2);
        }
    errs.mpjpe = mpjpe / static_cast<double>(t * p);

    // Procrustes minimizes squared error; the identity stays as a per-frame
    // fallback so the unsquared mean can never come out above MPJPE.
    double pampjpe = 0.0;
    std::vector<double> src(static_cast<size_t>(p) * 3), dst(static_cast<size_t>(p) * 3);
    for (int64_t i = 0; i < t; ++i) {
        for (int64_t j = 0; j < p; ++j)
            for (int c = 0; c < 3; ++c) {
                src[static_cast<size_t>(j * 3 + c)] = gen.at(i, j, c);
                dst[static_cast<size_t>(j * 3 + c)] = gt.at(i, j, c);
            }
        const Similarity sim = umeyama_alignment(src, dst);
        double aligned_err = 0.0, plain_err = 0.0;
        for (int64_t j = 0; j < p; ++j) {
            double aligned[3];
            for (int r = 0; r < 3; ++r) {
                double acc = 0.0;
                for (int c = 0; c < 3; ++c) acc += sim.rotation[r * 3 + c] * src[static_cast<size_t>(j * 3 + c)];
                aligned[r] = sim.scale * acc + sim.translation[r];
            }
            double d2a = 0.0, d2p = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double da = aligned[c] - dst[static_cast<size_t>(j * 3 + c)];
                const double dp = src[static_cast<size_t>(j * 3 + c)] - dst[static_cast<size_t>(j * 3 + c)];
                d2a += da * da;
                d2p += dp * dp;
            }
            aligned_err += std::sqrt(d2a);
            plain_err += std::sqrt(d2p);
        }
        pampjpe += std::min(aligned_err, plain_err);
    }
    errs.pampjpe = pampjpe / static_cast<double>(t * p);

    if (t >= 3) {
        double accl = 0.0;
        const double fps2 = gen.fps * gen.fps;
        for (int64_t i = 1; i + 1 < t; ++i)
            for (int64_t j = 0; j < p; ++j) {
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double ag =
                        (gen.at(i + 1, j, c) - 2.0 * gen.at(i, j, c) + gen.at(i - 1, j, c)) * fps2;
                    const double at =
                        (gt.at(i + 1, j, c) - 2.0 * gt.at(i, j, c) + gt.at(i - 1, j, c)) * fps2;
                    d2 += (ag - at) * (ag - at);
                }
                accl += std::sqrt(d2);
            }
        errs.accl = accl / static_cast<double>((t - 2) * p);
    }
    return errs;
}

ReconstructionErrors motion_reconstruction(const motion::MotionSequence& gen,
                                           const motion::MotionSequence& gt) {
    if (gen.length() != gt.length())
        throw std::invalid_argument("motion_reconstruction: frame count mismatch " +
                                    std::to_string(gen.length()) + " vs " +
                                    std::to_string(gt.length()));
    return landmark_reconstruction(joints_from_motion(gen), joints_from_motion(gt));
}

// ---------------------------------------------------------------- vocal

GpeResult gpe(const std::vector<double>& f0_ref, const std::vector<bool>& voiced_ref,
              const std::vector<double>& f0_est, const std::vector<bool>& voiced_est) {
    if (f0_ref.size() != voiced_ref.size() || f0_est.size() != voiced_est.size() ||
        f0_ref.size() != f0_est.size())
        throw std::invalid_argument("gpe: track lengths differ");
    int64_t both = 0, gross = 0;
    for (size_t i = 0; i < f0_ref.size(); ++i) {
        if (!voiced_ref[i] || !voiced_est[i]) continue;
        ++both;
        if (std::abs(f0_est[i] - f0_ref[i]) / f0_ref[i] > 0.2) ++gross;
    }
    GpeResult r;
    if (both == 0) return r;  // undefined, reported
    r.defined = true;
    r.percent = 100.0 * static_cast<double>(gross) / static_cast<double>(both);
    return r;
}

double vde(const std::vector<bool>& voiced_ref, const std::vector<bool>& voiced_est) {
    if (voiced_ref.size() != voiced_est.size())
        throw std::invalid_argument("vde: track lengths differ");
    if (voiced_ref.empty()) throw std::invalid_argument("vde: empty tracks");
    int64_t bad = 0;
    for (size_t i = 0; i < voiced_ref.size(); ++i)
        if (voiced_ref[i] != voiced_est[i]) ++bad;
    return 100.0 * static_cast<double>(bad) / static_cast<double>(voiced_ref.size());
}

std::string normalize_text(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (std::isspace(c)) {
            pending_space = true;
        }
        // punctuation dropped
    }
    return out;
}

double cer(const std::string& reference, const std::string& hypothesis) {
    const std::string ref = normalize_text(reference);
    const std::string hyp = normalize_text(hypothesis);
    if (ref.empty()) throw std::invalid_argument("cer: reference empty after normalization");
    const size_t n = ref.size(), m = hyp.size();
    std::vector<int64_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int64_t>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int64_t>(i);
        for (size_t j = 1; j <= m; ++j) {
            const int64_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[m]) / static_cast<double>(n);
}

// ---------------------------------------------------------------- report

void EvalReport::save_json(const std::string& path) const {
    nlohmann::json j;
    j["values"] = values;
    j["config"] = config;
    j["provenance"] = provenance;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    auto write_row = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << row[i];
        }
        out << "\n";
    };
    write_row(header);
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("csv row width " + std::to_string(row.size()) +
                                        " != header width " + std::to_string(header.size()));
        write_row(row);
    }
}

}  // namespace vp::metrics
