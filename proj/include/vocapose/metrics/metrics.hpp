#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/core/tensor.hpp"
#include "vocapose/motion/types.hpp"

namespace vp::metrics {

// ---------------------------------------------------------------- features

struct FeatureSet {
    core::Tensor rows;  // [N, F], one feature vector per clip
};

// Frechet distance between Gaussian fits of the two sets:
// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), covariances with
// ddof=1. Requires N >= 2 per set and matching F.
double fid(const FeatureSet& real, const FeatureSet& gen);

enum class DiversityMode {
    from_mean,  // mean distance of rows from the feature mean (committed choice)
    pairwise,   // mean pairwise distance between distinct rows
};
double diversity(const FeatureSet& gen, DiversityMode mode = DiversityMode::from_mean);
const char* diversity_mode_name(DiversityMode mode);

// ---------------------------------------------------------------- beats

struct BeatSet {
    std::vector<double> times;  // strictly increasing seconds
};

// BC kernel: mean over motion beats of exp(-d^2 / (2 sigma^2)) to the
// nearest audio beat. Requires >= 1 audio beat and >= 1 motion beat.
double beat_alignment_score(const BeatSet& motion_beats, const BeatSet& audio_beats,
                            double sigma = 0.1);

// Audio beats: peaks of the half-wave-rectified spectral-flux onset envelope
// above mean + 1 sigma of the envelope.
BeatSet audio_beats_from_samples(const std::vector<double>& audio, int sample_rate);

// Kinematic beats: local minima of mean joint speed with prominence >= 10%
// of the speed range.
BeatSet kinematic_beats(const motion::MotionSequence& seq);

struct BeatConstancyResult {
    bool defined = false;  // false when no kinematic beat exists
    double bc = 0.0;
    BeatSet audio_beats;
    BeatSet motion_beats;
};
BeatConstancyResult beat_constancy(const motion::MotionSequence& seq,
                                   const std::vector<double>& audio, int sample_rate,
                                   double sigma = 0.1);

// ---------------------------------------------------------------- landmarks

struct LandmarkSeq {
    core::Tensor positions;  // [T, P, 3] millimeters
    double fps = 0.0;

    int64_t frames() const { return positions.rank() == 3 ? positions.shape[0] : 0; }
    int64_t points() const { return positions.rank() == 3 ? positions.shape[1] : 0; }
    double at(int64_t t, int64_t p, int64_t c) const {
        return positions.at((t * positions.shape[1] + p) * 3 + c);
    }
    double& at(int64_t t, int64_t p, int64_t c) {
        return positions.at((t * positions.shape[1] + p) * 3 + c);
    }
};

// Mean over frames and lip indices of squared L2 position error (mm^2).
double lip_mse(const LandmarkSeq& gen, const LandmarkSeq& gt,
               const std::vector<int64_t>& lip_indices);
// Mean over frames and all landmarks of L2 difference of finite-difference
// velocities (per-frame deltas times fps).
double lvd(const LandmarkSeq& gen, const LandmarkSeq& gt);

// Synthetic joint mapping for reconstruction metrics: the 159 non-expression
// pose columns (jaw 3, body 63, hand 90, translation 3) are read as 53 joints
// of 3 coordinates in meters and scaled to millimeters.
LandmarkSeq joints_from_motion(const motion::MotionSequence& seq);

struct ReconstructionErrors {
    double mpjpe = 0.0;    // mm
    double pampjpe = 0.0;  // mm, after per-frame Procrustes similarity alignment
    double accl = 0.0;     // mm/s^2, second-difference error
};
ReconstructionErrors motion_reconstruction(const motion::MotionSequence& gen,
                                           const motion::MotionSequence& gt);
ReconstructionErrors landmark_reconstruction(const LandmarkSeq& gen, const LandmarkSeq& gt);

// ---------------------------------------------------------------- vocal

struct GpeResult {
    bool defined = false;  // false when no frame is voiced in both tracks
    double percent = 0.0;
};
// Share of mutually voiced frames whose pitch deviates > 20% from reference.
GpeResult gpe(const std::vector<double>& f0_ref, const std::vector<bool>& voiced_ref,
              const std::vector<double>& f0_est, const std::vector<bool>& voiced_est);
// Share of frames with mismatched voicing decisions.
double vde(const std::vector<bool>& voiced_ref, const std::vector<bool>& voiced_est);

// Lowercase, strip punctuation, collapse whitespace.
std::string normalize_text(const std::string& s);
// Levenshtein distance (unit costs) over normalized strings, divided by the
// normalized reference length. Rejects an empty reference.
double cer(const std::string& reference, const std::string& hypothesis);

// ---------------------------------------------------------------- report

struct EvalReport {
    nlohmann::json values = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::object();

    void save_json(const std::string& path) const;
};

// One CSV with a header row; every row must match the header width.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace vp::metrics
