#include "vocapose/vocal/tokenizer.hpp"

#include <fstream>
#include <set>

#include "vocapose/core/checkpoint.hpp"

namespace vp::vocal {

nlohmann::json VocalTokenizerConfig::to_json() const {
    return {{"sample_rate", sample_rate}, {"hop_seconds", hop_seconds}, {"n_mels", n_mels},
            {"n_units", n_units},         {"kmeans_iterations", kmeans_iterations},
            {"f0", f0.to_json()}};
}

VocalTokenizerConfig VocalTokenizerConfig::from_json(const nlohmann::json& j) {
    VocalTokenizerConfig c;
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.hop_seconds = j.value("hop_seconds", c.hop_seconds);
    c.n_mels = j.value("n_mels", c.n_mels);
    c.n_units = j.value("n_units", c.n_units);
    c.kmeans_iterations = j.value("kmeans_iterations", c.kmeans_iterations);
    if (j.contains("f0")) c.f0 = F0CodecConfig::from_json(j.at("f0"));
    return c;
}

VocalTokenizer::VocalTokenizer(VocalTokenizerConfig cfg, KMeansModel kmeans, F0Codec f0_codec)
    : cfg_(std::move(cfg)), kmeans_(std::move(kmeans)), f0_(std::move(f0_codec)) {}

VocalTokenizer VocalTokenizer::fit(const std::vector<ClipAudio>& corpus,
                                   const VocalTokenizerConfig& cfg, const FitBudget& budget,
                                   uint64_t seed, const std::vector<std::string>& extra_singers) {
    if (corpus.empty()) throw std::invalid_argument("vocal tokenizer fit: empty corpus");

    // pooled frame features for the unit clusters
    std::vector<core::Tensor> feats;
    int64_t total_frames = 0;
    for (const ClipAudio& clip : corpus) {
        feats.push_back(extract_features(clip.samples, cfg.sample_rate, cfg.feature_config()));
        total_frames += feats.back().shape[0];
    }
    core::Tensor all({total_frames, cfg.n_mels});
    int64_t off = 0;
    for (const core::Tensor& f : feats) {
        std::copy(f.data.begin(), f.data.end(), all.data.begin() + off * cfg.n_mels);
        off += f.shape[0];
    }
    KMeansModel km = fit_units(all, cfg.n_units, cfg.kmeans_iterations, seed);

    // singer roster in first-seen order, widened by the extra entries
    std::vector<std::string> singers;
    auto add_singer = [&](const std::string& id) {
        for (const std::string& s : singers)
            if (s == id) return;
        singers.push_back(id);
    };
    for (const ClipAudio& clip : corpus) add_singer(clip.singer_id);
    for (const std::string& id : extra_singers) add_singer(id);

    std::vector<F0Sample> samples;
    for (const ClipAudio& clip : corpus) {
        F0Track track = estimate_f0(clip.samples, cfg.sample_rate, cfg.pitch_config());
        samples.push_back(F0Sample{std::move(track.f0_hz), std::move(track.voiced), clip.singer_id});
    }
    F0Codec f0(cfg.f0, singers, seed ^ 0x5eedf00dull);
    train_f0_vq(f0, samples, budget.adam, budget.f0_steps, budget.f0_batch, seed ^ 0xabcdull);

    return VocalTokenizer(cfg, std::move(km), std::move(f0));
}

UnitSeq VocalTokenizer::analyze(const std::vector<double>& audio, const std::string& singer) {
    const core::Tensor feats = extract_features(audio, cfg_.sample_rate, cfg_.feature_config());
    F0Track track = estimate_f0(audio, cfg_.sample_rate, cfg_.pitch_config());
    UnitSeq units;
    units.semantic_ids = assign_units(feats, kmeans_);
    units.pitch_ids = f0_.encode_pitch(track.f0_hz, track.voiced, singer);
    if (units.semantic_ids.size() != units.pitch_ids.size())
        throw std::runtime_error("vocal tokenizer: semantic/pitch frame counts diverged");
    return units;
}

void VocalTokenizer::save(const std::string& path) const {
    core::Checkpoint ck;
    ck.put("kmeans.centroids", kmeans_.centroids);
    VocalTokenizer* self = const_cast<VocalTokenizer*>(this);
    for (core::Parameter* p : self->f0_.params()) ck.put(p->name, p->value);
    const motion::Codebook& cb = self->f0_.codebook();
    ck.put("f0.codebook.entries", cb.entries);
    ck.put("f0.codebook.ema_sum", cb.ema_sum);
    core::Tensor counts({static_cast<int64_t>(cb.ema_count.size())});
    counts.data = cb.ema_count;
    ck.put("f0.codebook.ema_count", counts);
    ck.meta["kind"] = "vocal_tokenizer";
    ck.meta["config"] = cfg_.to_json();
    ck.meta["singers"] = f0_.singers();
    ck.save(path);
}

VocalTokenizer VocalTokenizer::load(const std::string& path) {
    core::Checkpoint ck = core::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "vocal_tokenizer")
        throw std::runtime_error(path + " is not a vocal tokenizer checkpoint");
    VocalTokenizerConfig cfg = VocalTokenizerConfig::from_json(ck.meta.at("config"));
    KMeansModel km;
    km.centroids = ck.get("kmeans.centroids");
    F0Codec f0(cfg.f0, ck.meta.at("singers").get<std::vector<std::string>>(), 0);
    ck.load_into(f0.params());
    f0.codebook().entries = ck.get("f0.codebook.entries");
    f0.codebook().ema_sum = ck.get("f0.codebook.ema_sum");
    f0.codebook().ema_count = ck.get("f0.codebook.ema_count").data;
    return VocalTokenizer(std::move(cfg), std::move(km), std::move(f0));
}

void write_units_jsonl(const std::string& path, const std::vector<UnitRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write unit file: " + path);
    for (const UnitRecord& r : records) {
        nlohmann::json j;
        j["clip_id"] = r.clip_id;
        j["semantic_ids"] = r.units.semantic_ids;
        j["pitch_ids"] = r.units.pitch_ids;
        j["singer_id"] = r.singer_id;
        j["hop_seconds"] = r.hop_seconds;
        out << j.dump() << "\n";
    }
}

std::vector<UnitRecord> read_units_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read unit file: " + path);
    std::vector<UnitRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        UnitRecord r;
        r.clip_id = j.at("clip_id").get<std::string>();
        r.units.semantic_ids = j.at("semantic_ids").get<std::vector<int32_t>>();
        r.units.pitch_ids = j.at("pitch_ids").get<std::vector<int32_t>>();
        r.singer_id = j.at("singer_id").get<std::string>();
        r.hop_seconds = j.at("hop_seconds").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace vp::vocal
