#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/vocal/f0_codec.hpp"
#include "vocapose/vocal/features.hpp"
#include "vocapose/vocal/kmeans.hpp"
#include "vocapose/vocal/types.hpp"

namespace vp::vocal {

struct VocalTokenizerConfig {
    int sample_rate = 16000;
    double hop_seconds = 0.02;
    int n_mels = 40;
    int64_t n_units = 500;  // k-means centroids over frame features
    int64_t kmeans_iterations = 25;
    F0CodecConfig f0;

    FeatureConfig feature_config() const {
        FeatureConfig f;
        f.hop_seconds = hop_seconds;
        f.n_mels = n_mels;
        return f;
    }
    F0Config pitch_config() const {
        F0Config p;
        p.hop_seconds = hop_seconds;
        return p;
    }

    nlohmann::json to_json() const;
    static VocalTokenizerConfig from_json(const nlohmann::json& j);
};

struct ClipAudio {
    std::vector<double> samples;
    std::string singer_id;
};

// Semantic units from k-means over log-mel frames plus pitch ids from the F0
// VQ; both on the shared hop, so the two id sequences always align 1:1.
class VocalTokenizer {
public:
    VocalTokenizer(VocalTokenizerConfig cfg, KMeansModel kmeans, F0Codec f0_codec);

    struct FitBudget {
        int64_t f0_steps = 300;
        int64_t f0_batch = 8;
        core::AdamConfig adam{0.9, 0.99, 1e-3, 1e-8};
    };
    // extra_singers widens the roster beyond the fitting corpus (their
    // embeddings stay at initialization until trained).
    static VocalTokenizer fit(const std::vector<ClipAudio>& corpus,
                              const VocalTokenizerConfig& cfg, const FitBudget& budget,
                              uint64_t seed, const std::vector<std::string>& extra_singers = {});

    UnitSeq analyze(const std::vector<double>& audio, const std::string& singer);

    const VocalTokenizerConfig& config() const { return cfg_; }
    const KMeansModel& kmeans() const { return kmeans_; }
    F0Codec& f0_codec() { return f0_; }

    void save(const std::string& path) const;
    static VocalTokenizer load(const std::string& path);

private:
    VocalTokenizerConfig cfg_;
    KMeansModel kmeans_;
    F0Codec f0_;
};

// Unit files are JSON-lines:
// {"clip_id", "semantic_ids", "pitch_ids", "singer_id", "hop_seconds"}
struct UnitRecord {
    std::string clip_id;
    UnitSeq units;
    std::string singer_id;
    double hop_seconds = 0.0;
};
void write_units_jsonl(const std::string& path, const std::vector<UnitRecord>& records);
std::vector<UnitRecord> read_units_jsonl(const std::string& path);

}  // namespace vp::vocal
