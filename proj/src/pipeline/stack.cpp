#include "vocapose/pipeline/stack.hpp"

#include <filesystem>

#include "vocapose/vocal/resynth.hpp"
#include "vocapose/vocal/wav.hpp"

namespace vp::pipeline {

namespace fs = std::filesystem;
using motion::Part;

tokens::VocabLayout StackConfig::layout() const {
    tokens::VocabLayout l;
    l.hubert_width = vocal.n_units;
    l.pitch_width = vocal.f0.codebook_size;
    l.face_width = codec.codebook_size;
    l.body_width = codec.codebook_size;
    l.hand_width = codec.codebook_size;
    return l;
}

StackConfig StackConfig::quick() {
    StackConfig cfg;
    cfg.codec.codebook_size = 32;
    cfg.codec.code_dim = 16;
    cfg.codec.hidden = 24;
    cfg.codec.window_length = 48;
    cfg.codec.reset_staleness = 25;
    cfg.codec_steps = 60;
    cfg.codec_batch = 6;

    cfg.vocal.n_units = 32;
    cfg.vocal.kmeans_iterations = 12;
    cfg.vocal.f0.code_dim = 4;
    cfg.vocal.f0.hidden = 16;
    cfg.vocal.f0.singer_dim = 16;
    cfg.vocal.f0.kernel = 5;
    cfg.vocal_budget.f0_steps = 80;

    cfg.lm.layers = 2;
    cfg.lm.heads = 2;
    cfg.lm.d_model = 64;
    cfg.lm.context_length = 640;
    cfg.lm.batch_size = 6;
    cfg.lm.epochs = 300;
    cfg.lm.learning_rate = 0.005;
    cfg.lm.stop_loss = 0.3;
    cfg.lm_window_seconds = 1.6;
    cfg.sampler.top_k = 3;
    cfg.sampler.temperature = 0.7;
    cfg.sampler.seed = 7;
    cfg.generate_max_tokens = 420;
    cfg.samples_per_clip = 3;
    return cfg;
}

std::string StackPaths::codec(Part p) const {
    return (fs::path(dir) / (std::string("codec_") + motion::part_name(p) + ".ckpt")).string();
}
std::string StackPaths::vocal() const { return (fs::path(dir) / "vocal.ckpt").string(); }
std::string StackPaths::lm() const { return (fs::path(dir) / "lm.ckpt").string(); }
std::string StackPaths::layout() const { return (fs::path(dir) / "layout.json").string(); }
std::string StackPaths::train_streams() const {
    return (fs::path(dir) / "train_streams.jsonl").string();
}
std::string StackPaths::generated() const { return (fs::path(dir) / "generated.jsonl").string(); }
std::string StackPaths::report() const { return (fs::path(dir) / "report.json").string(); }
std::string StackPaths::generation_csv() const {
    return (fs::path(dir) / "generation_metrics.csv").string();
}
std::string StackPaths::reconstruction_csv() const {
    return (fs::path(dir) / "reconstruction_metrics.csv").string();
}

std::vector<LoadedClip> load_clips(const std::vector<ClipManifest>& manifest,
                                   const std::string& split) {
    std::vector<LoadedClip> out;
    for (const ClipManifest& c : manifest) {
        if (!split.empty() && c.split != split) continue;
        LoadedClip clip;
        clip.manifest = c;
        if (c.motion_path.empty())
            throw std::runtime_error("clip '" + c.clip_id + "' has no motion path");
        clip.motion = motion::read_motion_file(c.motion_path);
        vocal::WavData wav = vocal::read_wav(c.audio_path);
        clip.audio = std::move(wav.samples);
        out.push_back(std::move(clip));
    }
    return out;
}

namespace {

std::vector<core::Tensor> part_windows(const std::vector<LoadedClip>& clips, Part p,
                                       int64_t window) {
    std::vector<core::Tensor> out;
    for (const LoadedClip& clip : clips) {
        auto w = motion::cut_windows(clip.motion.extract_part(p), window);
        for (auto& t : w) out.push_back(std::move(t));
    }
    return out;
}

motion::MotionSequence truncated_motion(const LoadedClip& clip, double seconds) {
    if (seconds <= 0.0) return clip.motion;
    const int64_t frames = std::min<int64_t>(
        clip.motion.length(), static_cast<int64_t>(seconds * clip.motion.fps));
    core::Tensor f({frames, motion::kFrameDim});
    std::copy_n(clip.motion.frames.data.begin(), frames * motion::kFrameDim, f.data.begin());
    return motion::MotionSequence(std::move(f), clip.motion.fps);
}

std::vector<double> truncated_audio(const LoadedClip& clip, double seconds, int sample_rate) {
    if (seconds <= 0.0) return clip.audio;
    const size_t n = std::min(clip.audio.size(), static_cast<size_t>(seconds * sample_rate));
    return std::vector<double>(clip.audio.begin(), clip.audio.begin() + static_cast<int64_t>(n));
}

}  // namespace

void train_codecs_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                        const StackPaths& out) {
    if (train.empty()) throw std::invalid_argument("train_codecs_stage: no training clips");
    fs::create_directories(out.dir);
    core::AdamConfig adam;
    adam.learning_rate = cfg.codec_lr;
    for (Part p : {Part::face, Part::body, Part::hand}) {
        motion::PartCodec codec(motion::part_name(p), motion::part_dim(p), cfg.codec,
                                cfg.seed + static_cast<uint64_t>(p));
        auto windows = part_windows(train, p, cfg.codec.window_length);
        codec.fit_normalizer(windows);
        motion::train_codec(codec, windows, adam, cfg.codec_steps, cfg.codec_batch,
                            cfg.seed * 31 + static_cast<uint64_t>(p));
        codec.save(out.codec(p));
    }
}

void fit_vocal_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                     const StackPaths& out, const std::vector<std::string>& extra_singers) {
    if (train.empty()) throw std::invalid_argument("fit_vocal_stage: no training clips");
    fs::create_directories(out.dir);
    std::vector<vocal::ClipAudio> corpus;
    for (const LoadedClip& clip : train)
        corpus.push_back(vocal::ClipAudio{clip.audio, clip.manifest.singer_id});
    vocal::VocalTokenizer tok = vocal::VocalTokenizer::fit(corpus, cfg.vocal, cfg.vocal_budget,
                                                           cfg.seed * 97 + 5, extra_singers);
    tok.save(out.vocal());
}

std::vector<tokens::NamedStream> build_streams_stage(const std::vector<LoadedClip>& clips,
                                                     const StackConfig& cfg, const StackPaths& out,
                                                     bool write_files) {
    const tokens::VocabLayout layout = cfg.layout();
    motion::PartCodec face = motion::PartCodec::load(out.codec(Part::face));
    motion::PartCodec body = motion::PartCodec::load(out.codec(Part::body));
    motion::PartCodec hand = motion::PartCodec::load(out.codec(Part::hand));
    vocal::VocalTokenizer voc = vocal::VocalTokenizer::load(out.vocal());

    std::vector<tokens::NamedStream> streams;
    for (const LoadedClip& clip : clips) {
        const motion::MotionSequence m = truncated_motion(clip, cfg.lm_window_seconds);
        const std::vector<double> audio =
            truncated_audio(clip, cfg.lm_window_seconds, cfg.vocal.sample_rate);
        motion::PartTokenSeq f{Part::face, face.encode_ids(m.extract_part(Part::face))};
        motion::PartTokenSeq b{Part::body, body.encode_ids(m.extract_part(Part::body))};
        motion::PartTokenSeq h{Part::hand, hand.encode_ids(m.extract_part(Part::hand))};
        vocal::UnitSeq units = voc.analyze(audio, clip.manifest.singer_id);
        tokens::TokenStream mixed =
            tokens::mix(tokens::interleave_vocal(units.semantic_ids, units.pitch_ids, layout),
                        tokens::interleave_motion(f, b, h, layout), layout);
        streams.push_back(tokens::NamedStream{clip.manifest.clip_id, std::move(mixed)});
    }
    if (write_files) {
        tokens::write_layout_json(out.layout(), layout);
        tokens::write_streams_jsonl(out.train_streams(), streams);
    }
    return streams;
}

void train_lm_stage(const std::vector<LoadedClip>& train, const StackConfig& cfg,
                    const StackPaths& out) {
    const std::vector<tokens::NamedStream> streams = build_streams_stage(train, cfg, out, true);
    std::vector<lm::TrainClip> corpus;
    for (size_t i = 0; i < streams.size(); ++i)
        corpus.push_back(
            lm::TrainClip{streams[i].clip_id, train[i].manifest.lyric, streams[i].stream});
    lm::TokenLM model(cfg.lm, cfg.layout(), cfg.seed * 131 + 7);
    lm::train_lm(model, corpus, cfg.seed * 137 + 11);
    model.save(out.lm(), cfg.sampler);
}

void generate_stage(const std::vector<LoadedClip>& eval_clips, const StackConfig& cfg,
                    const StackPaths& out) {
    lm::TokenLM model = lm::TokenLM::load(out.lm());
    std::vector<tokens::NamedStream> generated;
    for (size_t i = 0; i < eval_clips.size(); ++i) {
        for (int64_t k = 0; k < cfg.samples_per_clip; ++k) {
            lm::SamplerConfig sampler = cfg.sampler;
            sampler.seed = cfg.sampler.seed + i * 977 + static_cast<uint64_t>(k) * 104729;
            lm::GenerateResult r =
                model.generate(eval_clips[i].manifest.lyric, sampler, cfg.generate_max_tokens);
            std::string id = eval_clips[i].manifest.clip_id;
            if (cfg.samples_per_clip > 1) id += "#" + std::to_string(k);
            generated.push_back(tokens::NamedStream{id, r.stream});
        }
    }
    tokens::write_streams_jsonl(out.generated(), generated);
}

metrics::EvalReport evaluate_stage(const std::vector<LoadedClip>& eval_clips,
                                   const StackConfig& cfg, const StackPaths& out) {
    const tokens::VocabLayout layout = cfg.layout();
    motion::PartCodec face = motion::PartCodec::load(out.codec(Part::face));
    motion::PartCodec body = motion::PartCodec::load(out.codec(Part::body));
    motion::PartCodec hand = motion::PartCodec::load(out.codec(Part::hand));
    vocal::VocalTokenizer voc = vocal::VocalTokenizer::load(out.vocal());
    const std::vector<tokens::NamedStream> generated = tokens::read_streams_jsonl(out.generated());

    metrics::EvalReport report;
    report.config["codec"] = cfg.codec.to_json();
    report.config["layout"] = layout.to_json();
    report.config["sampler"] = {{"top_k", cfg.sampler.top_k},
                                {"temperature", cfg.sampler.temperature},
                                {"seed", cfg.sampler.seed}};
    report.provenance["fid_features"] =
        "body codec encoder, pooled pre-quantization latent, frozen at evaluation";
    report.provenance["diversity_mode"] = metrics::diversity_mode_name(metrics::DiversityMode::from_mean);
    report.provenance["cer"] = "not computed: needs externally transcribed hypotheses";

    // reconstruction of ground-truth motion through the codecs (Table-4 style)
    metrics::ReconstructionErrors recon_sum;
    int64_t recon_n = 0;
    for (const LoadedClip& clip : eval_clips) {
        motion::MotionSequence rebuilt = clip.motion;
        for (auto [part, codec] :
             std::initializer_list<std::pair<Part, motion::PartCodec*>>{
                 {Part::face, &face}, {Part::body, &body}, {Part::hand, &hand}}) {
            const core::Tensor gt_part = clip.motion.extract_part(part);
            core::Tensor dec = codec->decode_ids(codec->encode_ids(gt_part));
            core::Tensor cut({clip.motion.length(), dec.shape[1]});
            std::copy_n(dec.data.begin(), cut.numel(), cut.data.begin());
            rebuilt.insert_part(part, cut);
        }
        const metrics::ReconstructionErrors e = metrics::motion_reconstruction(rebuilt, clip.motion);
        recon_sum.mpjpe += e.mpjpe;
        recon_sum.pampjpe += e.pampjpe;
        recon_sum.accl += e.accl;
        ++recon_n;
    }
    if (recon_n > 0) {
        report.values["reconstruction"] = {{"MPJPE", recon_sum.mpjpe / recon_n},
                                           {"PAMPJPE", recon_sum.pampjpe / recon_n},
                                           {"ACCL", recon_sum.accl / recon_n}};
        metrics::write_csv(
            out.reconstruction_csv(), {"design", "MPJPE", "PAMPJPE", "ACCL"},
            {{"split_codecs", std::to_string(recon_sum.mpjpe / recon_n),
              std::to_string(recon_sum.pampjpe / recon_n), std::to_string(recon_sum.accl / recon_n)}});
    }

    // generated streams vs ground truth
    std::vector<std::vector<double>> real_feats, gen_feats;
    for (const LoadedClip& clip : eval_clips)
        real_feats.push_back(body.pooled_latent(clip.motion.extract_part(Part::body)));
    double bc_sum = 0.0, lvd_sum = 0.0, mse_sum = 0.0, gpe_sum = 0.0, vde_sum = 0.0;
    int64_t bc_n = 0, lvd_n = 0, gpe_n = 0, vde_n = 0;
    for (const tokens::NamedStream& gen : generated) {
        std::string base_id = gen.clip_id;
        const size_t hash_pos = base_id.rfind('#');
        if (hash_pos != std::string::npos) base_id = base_id.substr(0, hash_pos);
        const LoadedClip* clip = nullptr;
        for (const LoadedClip& c : eval_clips)
            if (c.manifest.clip_id == base_id) clip = &c;
        if (!clip) continue;

        tokens::DecoupleParams dp;
        dp.hop_seconds = cfg.vocal.hop_seconds;
        dp.fps = clip->motion.fps;
        dp.downsample = cfg.codec.downsample;
        const tokens::DecoupleReport dec = tokens::decouple(gen.stream, layout, dp);

        if (!dec.face.ids.empty()) {
            core::Tensor face_m = face.decode_ids(dec.face.ids);
            core::Tensor body_m = body.decode_ids(dec.body.ids);
            core::Tensor hand_m = hand.decode_ids(dec.hand.ids);
            const int64_t frames = face_m.shape[0];
            motion::MotionSequence gen_motion(core::Tensor::zeros({frames, motion::kFrameDim}),
                                              clip->motion.fps);
            gen_motion.insert_part(Part::face, face_m);
            gen_motion.insert_part(Part::body, body_m);
            gen_motion.insert_part(Part::hand, hand_m);

            gen_feats.push_back(body.pooled_latent(gen_motion.extract_part(Part::body)));

            metrics::BeatConstancyResult bc =
                metrics::beat_constancy(gen_motion, clip->audio, cfg.vocal.sample_rate);
            if (bc.defined) {
                bc_sum += bc.bc;
                ++bc_n;
            }

            const int64_t common =
                std::min(gen_motion.length(), clip->motion.length());
            if (common >= 2) {
                metrics::LandmarkSeq gen_j = metrics::joints_from_motion(gen_motion);
                metrics::LandmarkSeq gt_j = metrics::joints_from_motion(clip->motion);
                metrics::LandmarkSeq gen_cut, gt_cut;
                gen_cut.fps = gen_j.fps;
                gt_cut.fps = gt_j.fps;
                gen_cut.positions = core::Tensor({common, gen_j.points(), 3});
                gt_cut.positions = core::Tensor({common, gt_j.points(), 3});
                std::copy_n(gen_j.positions.data.begin(), gen_cut.positions.numel(),
                            gen_cut.positions.data.begin());
                std::copy_n(gt_j.positions.data.begin(), gt_cut.positions.numel(),
                            gt_cut.positions.data.begin());
                lvd_sum += metrics::lvd(gen_cut, gt_cut);
                mse_sum += metrics::lip_mse(gen_cut, gt_cut, {0});
                ++lvd_n;
            }
        }

        if (!dec.vocal.semantic_ids.empty()) {
            vocal::UnitSeq units = dec.vocal;
            vocal::SynthesisConfig synth;
            synth.sample_rate = cfg.vocal.sample_rate;
            synth.hop_seconds = cfg.vocal.hop_seconds;
            const std::vector<double> rebuilt = vocal::resynthesize(
                units, clip->manifest.singer_id, voc.kmeans(), voc.f0_codec(), synth);
            const vocal::F0Track ref =
                vocal::estimate_f0(clip->audio, cfg.vocal.sample_rate, cfg.vocal.pitch_config());
            const vocal::F0Track est =
                vocal::estimate_f0(rebuilt, cfg.vocal.sample_rate, cfg.vocal.pitch_config());
            const size_t n = std::min(ref.f0_hz.size(), est.f0_hz.size());
            std::vector<double> rf(ref.f0_hz.begin(), ref.f0_hz.begin() + n);
            std::vector<double> ef(est.f0_hz.begin(), est.f0_hz.begin() + n);
            std::vector<bool> rv(ref.voiced.begin(), ref.voiced.begin() + n);
            std::vector<bool> ev(est.voiced.begin(), est.voiced.begin() + n);
            const metrics::GpeResult g = metrics::gpe(rf, rv, ef, ev);
            if (g.defined) {
                gpe_sum += g.percent;
                ++gpe_n;
            }
            vde_sum += metrics::vde(rv, ev);
            ++vde_n;
        }
    }

    auto put_mean = [&](const char* key, double sum, int64_t n) {
        if (n > 0)
            report.values[key] = sum / static_cast<double>(n);
        else
            report.values[key] = nullptr;
    };
    if (real_feats.size() >= 2 && gen_feats.size() >= 2) {
        const int64_t fdim = static_cast<int64_t>(real_feats[0].size());
        metrics::FeatureSet real_set, gen_set;
        real_set.rows = core::Tensor({static_cast<int64_t>(real_feats.size()), fdim});
        gen_set.rows = core::Tensor({static_cast<int64_t>(gen_feats.size()), fdim});
        for (size_t i = 0; i < real_feats.size(); ++i)
            std::copy(real_feats[i].begin(), real_feats[i].end(),
                      real_set.rows.data.begin() + static_cast<int64_t>(i) * fdim);
        for (size_t i = 0; i < gen_feats.size(); ++i)
            std::copy(gen_feats[i].begin(), gen_feats[i].end(),
                      gen_set.rows.data.begin() + static_cast<int64_t>(i) * fdim);
        report.values["FID"] = metrics::fid(real_set, gen_set);
        report.values["DIV"] = metrics::diversity(gen_set);
    } else {
        report.values["FID"] = nullptr;
        report.values["DIV"] = nullptr;
    }
    put_mean("BC", bc_sum, bc_n);
    put_mean("MSE", mse_sum, lvd_n);
    put_mean("LVD", lvd_sum, lvd_n);
    put_mean("GPE", gpe_sum, gpe_n);
    put_mean("VDE", vde_sum, vde_n);

    auto cell = [&](const char* key) {
        return report.values[key].is_null() ? std::string("n/a")
                                            : std::to_string(report.values[key].get<double>());
    };
    metrics::write_csv(out.generation_csv(), {"set", "FID", "DIV", "BC", "MSE", "LVD", "GPE", "VDE"},
                       {{"generated", cell("FID"), cell("DIV"), cell("BC"), cell("MSE"),
                         cell("LVD"), cell("GPE"), cell("VDE")}});
    report.save_json(out.report());
    return report;
}

metrics::EvalReport run_stack(const std::string& manifest_path, const StackConfig& cfg,
                              const StackPaths& out) {
    const std::vector<ClipManifest> manifest = read_manifest_jsonl(manifest_path);
    const std::vector<LoadedClip> train = load_clips(manifest, "train");
    std::vector<LoadedClip> eval_clips = load_clips(manifest, "test");
    if (eval_clips.empty()) eval_clips = load_clips(manifest, "val");
    if (eval_clips.empty()) throw std::runtime_error("run_stack: no test or val clips");

    std::vector<std::string> roster;
    for (const ClipManifest& c : manifest) roster.push_back(c.singer_id);
    train_codecs_stage(train, cfg, out);
    fit_vocal_stage(train, cfg, out, roster);
    train_lm_stage(train, cfg, out);
    generate_stage(eval_clips, cfg, out);
    return evaluate_stage(eval_clips, cfg, out);
}

}  // namespace vp::pipeline
