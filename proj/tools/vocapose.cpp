// Command-line surface over the library: dataset building, tokenizer
// training, language-model training/generation, resynthesis, evaluation and
// the tokenizer ablations. Every subcommand honors --seed/--config/--out and
// exits nonzero with a structured error line on failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "vocapose/core/parallel.hpp"
#include "vocapose/lm/model.hpp"
#include "vocapose/metrics/metrics.hpp"
#include "vocapose/motion/ablation.hpp"
#include "vocapose/motion/codec.hpp"
#include "vocapose/pipeline/fixture.hpp"
#include "vocapose/pipeline/stack.hpp"
#include "vocapose/tokens/token_space.hpp"
#include "vocapose/vocal/resynth.hpp"
#include "vocapose/vocal/tokenizer.hpp"
#include "vocapose/vocal/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    json j;
    in >> j;
    return j;
}

// config supplies defaults; explicitly passed flags win
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const json& cfg, const char* key, T& out) {
    if (app.count(flag) == 0 && cfg.contains(key)) out = cfg.at(key).get<T>();
}

vp::metrics::FeatureSet read_feature_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read feature file: " + path);
    json j;
    in >> j;
    const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::runtime_error("feature file has no rows: " + path);
    vp::metrics::FeatureSet fs_out;
    fs_out.rows = vp::core::Tensor(
        {static_cast<int64_t>(rows.size()), static_cast<int64_t>(rows[0].size())});
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::runtime_error("ragged feature rows in " + path);
        std::copy(rows[i].begin(), rows[i].end(),
                  fs_out.rows.data.begin() + static_cast<int64_t>(i * rows[0].size()));
    }
    return fs_out;
}

void read_track_file(const std::string& path, std::vector<double>& f0, std::vector<bool>& voiced) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read track file: " + path);
    json j;
    in >> j;
    f0 = j.at("f0").get<std::vector<double>>();
    for (int v : j.at("voiced").get<std::vector<int>>()) voiced.push_back(v != 0);
    if (f0.size() != voiced.size()) throw std::runtime_error("track file lengths differ: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read text file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"text -> vocal + whole-body motion token stack"};
    app.require_subcommand(1);

    app.add_option("--threads", "worker threads for the kernels (0 = auto)")
        ->each([](const std::string& s) {
            const int n = std::stoi(s);
            if (n > 0) vp::core::set_num_threads(n);
        });

    // ------------------------------------------------ dataset build
    auto* dataset = app.add_subcommand("dataset", "dataset plumbing");
    auto* build = dataset->add_subcommand("build", "generate the synthetic fixture corpus");
    std::string build_out, build_cfg;
    uint64_t build_seed = 1;
    int64_t build_songs = 12, build_lines = 8;
    build->add_option("--out", build_out, "output directory")->required();
    build->add_option("--songs", build_songs, "number of songs");
    build->add_option("--lines", build_lines, "lines per song");
    build->add_option("--seed", build_seed, "rng seed");
    build->add_option("--config", build_cfg, "JSON config (flags win)");
    build->callback([&]() {
        const json cfg = load_config(build_cfg);
        merge(*build, "--songs", cfg, "songs", build_songs);
        merge(*build, "--lines", cfg, "lines", build_lines);
        merge(*build, "--seed", cfg, "seed", build_seed);
        vp::pipeline::BuildConfig bc;
        bc.fixture.songs = build_songs;
        bc.fixture.lines_per_song = build_lines;
        bc.fixture.seed = build_seed;
        bc.out_dir = build_out;
        bc.seed = build_seed;
        const auto built = vp::pipeline::dataset_build(bc);
        std::cout << "wrote " << built.clips.size() << " clips to " << built.manifest_path << "\n";
    });

    // ------------------------------------------------ codec
    auto* codec_cmd = app.add_subcommand("codec", "motion codecs");
    auto* codec_train = codec_cmd->add_subcommand("train", "train one part codec");
    std::string ct_manifest, ct_part = "face", ct_out, ct_cfg;
    int64_t ct_steps = 300, ct_batch = 8, ct_k = 512, ct_dim = 512, ct_hidden = 128, ct_window = 72;
    double ct_lr = 2e-3;
    uint64_t ct_seed = 1;
    codec_train->add_option("--manifest", ct_manifest)->required();
    codec_train->add_option("--part", ct_part, "face|body|hand|single");
    codec_train->add_option("--out", ct_out)->required();
    codec_train->add_option("--steps", ct_steps);
    codec_train->add_option("--batch", ct_batch);
    codec_train->add_option("--codebook-size", ct_k);
    codec_train->add_option("--code-dim", ct_dim);
    codec_train->add_option("--hidden", ct_hidden);
    codec_train->add_option("--window", ct_window);
    codec_train->add_option("--lr", ct_lr);
    codec_train->add_option("--seed", ct_seed);
    codec_train->add_option("--config", ct_cfg);
    codec_train->callback([&]() {
        const json cfg = load_config(ct_cfg);
        merge(*codec_train, "--steps", cfg, "steps", ct_steps);
        merge(*codec_train, "--batch", cfg, "batch", ct_batch);
        merge(*codec_train, "--codebook-size", cfg, "codebook_size", ct_k);
        merge(*codec_train, "--code-dim", cfg, "code_dim", ct_dim);
        merge(*codec_train, "--hidden", cfg, "hidden", ct_hidden);
        merge(*codec_train, "--window", cfg, "window_length", ct_window);
        merge(*codec_train, "--lr", cfg, "learning_rate", ct_lr);
        merge(*codec_train, "--seed", cfg, "seed", ct_seed);

        vp::motion::CodecConfig cc;
        cc.codebook_size = ct_k;
        cc.code_dim = ct_dim;
        cc.hidden = ct_hidden;
        cc.window_length = ct_window;
        const auto manifest = vp::pipeline::read_manifest_jsonl(ct_manifest);
        const auto clips = vp::pipeline::load_clips(manifest, "train");
        if (clips.empty()) throw std::runtime_error("no train-split clips in " + ct_manifest);

        std::vector<vp::core::Tensor> windows;
        int64_t dim;
        std::string name;
        if (ct_part == "single") {
            dim = vp::motion::kFrameDim;
            name = "single";
            for (const auto& c : clips) {
                auto w = vp::motion::cut_windows(c.motion.frames, cc.window_length);
                for (auto& t : w) windows.push_back(std::move(t));
            }
        } else {
            const vp::motion::Part part = vp::motion::part_from_name(ct_part);
            dim = vp::motion::part_dim(part);
            name = ct_part;
            for (const auto& c : clips) {
                auto w = vp::motion::cut_windows(c.motion.extract_part(part), cc.window_length);
                for (auto& t : w) windows.push_back(std::move(t));
            }
        }
        vp::motion::PartCodec codec(name, dim, cc, ct_seed);
        codec.fit_normalizer(windows);
        vp::core::AdamConfig adam;
        adam.learning_rate = ct_lr;
        const auto curve =
            vp::motion::train_codec(codec, windows, adam, ct_steps, ct_batch, ct_seed * 31);
        codec.save(ct_out);
        std::cout << "trained " << name << " codec on " << windows.size() << " windows, loss "
                  << curve.loss.front() << " -> " << curve.smoothed(10, ct_steps - 1) << ", saved "
                  << ct_out << "\n";
    });

    auto* codec_encode = codec_cmd->add_subcommand("encode", "motion file -> token file");
    std::string ce_codec, ce_motion, ce_out, ce_clip;
    codec_encode->add_option("--codec", ce_codec)->required();
    codec_encode->add_option("--motion", ce_motion)->required();
    codec_encode->add_option("--out", ce_out)->required();
    codec_encode->add_option("--clip-id", ce_clip);
    codec_encode->callback([&]() {
        vp::motion::PartCodec codec = vp::motion::PartCodec::load(ce_codec);
        const auto seq = vp::motion::read_motion_file(ce_motion);
        const vp::core::Tensor part =
            codec.name() == "single"
                ? seq.frames
                : seq.extract_part(vp::motion::part_from_name(codec.name()));
        vp::tokens::NamedStream out;
        out.clip_id = ce_clip.empty() ? fs::path(ce_motion).stem().string() : ce_clip;
        for (int32_t id : codec.encode_ids(part)) out.stream.ids.push_back(id);
        vp::tokens::write_streams_jsonl(ce_out, {out});
        std::cout << "encoded " << out.stream.ids.size() << " tokens to " << ce_out << "\n";
    });

    auto* codec_decode = codec_cmd->add_subcommand("decode", "token file -> motion file");
    std::string cd_codec, cd_tokens, cd_out;
    double cd_fps = 20.0;
    codec_decode->add_option("--codec", cd_codec)->required();
    codec_decode->add_option("--tokens", cd_tokens)->required();
    codec_decode->add_option("--fps", cd_fps);
    codec_decode->add_option("--out", cd_out)->required();
    codec_decode->callback([&]() {
        vp::motion::PartCodec codec = vp::motion::PartCodec::load(cd_codec);
        const auto streams = vp::tokens::read_streams_jsonl(cd_tokens);
        if (streams.empty()) throw std::runtime_error("token file is empty: " + cd_tokens);
        const vp::core::Tensor part = codec.decode_ids(streams[0].stream.ids);
        vp::motion::MotionSequence seq(vp::core::Tensor::zeros({part.shape[0], vp::motion::kFrameDim}),
                                       cd_fps);
        if (codec.name() == "single")
            seq.frames = part;
        else
            seq.insert_part(vp::motion::part_from_name(codec.name()), part);
        vp::motion::write_motion_file(cd_out, seq);
        std::cout << "decoded " << part.shape[0] << " frames to " << cd_out << "\n";
    });

    // ------------------------------------------------ vocal
    auto* vocal_cmd = app.add_subcommand("vocal", "vocal tokenizer");
    auto* fit_units = vocal_cmd->add_subcommand("fit-units", "fit k-means + F0 VQ + singer table");
    std::string vf_manifest, vf_out, vf_cfg;
    int64_t vf_units = 500, vf_f0_steps = 300;
    uint64_t vf_seed = 1;
    fit_units->add_option("--manifest", vf_manifest)->required();
    fit_units->add_option("--out", vf_out)->required();
    fit_units->add_option("--units", vf_units);
    fit_units->add_option("--f0-steps", vf_f0_steps);
    fit_units->add_option("--seed", vf_seed);
    fit_units->add_option("--config", vf_cfg);
    fit_units->callback([&]() {
        const json cfg = load_config(vf_cfg);
        merge(*fit_units, "--units", cfg, "n_units", vf_units);
        merge(*fit_units, "--f0-steps", cfg, "f0_steps", vf_f0_steps);
        merge(*fit_units, "--seed", cfg, "seed", vf_seed);
        const auto manifest = vp::pipeline::read_manifest_jsonl(vf_manifest);
        const auto clips = vp::pipeline::load_clips(manifest, "train");
        std::vector<vp::vocal::ClipAudio> corpus;
        for (const auto& c : clips)
            corpus.push_back(vp::vocal::ClipAudio{c.audio, c.manifest.singer_id});
        vp::vocal::VocalTokenizerConfig vc;
        vc.n_units = vf_units;
        vp::vocal::VocalTokenizer::FitBudget budget;
        budget.f0_steps = vf_f0_steps;
        const auto tok = vp::vocal::VocalTokenizer::fit(corpus, vc, budget, vf_seed);
        tok.save(vf_out);
        std::cout << "fit " << vf_units << " units + F0 VQ over " << corpus.size()
                  << " clips, saved " << vf_out << "\n";
    });

    auto* analyze = vocal_cmd->add_subcommand("analyze", "audio -> unit file");
    std::string va_vocal, va_audio, va_singer, va_out, va_clip;
    analyze->add_option("--vocal", va_vocal)->required();
    analyze->add_option("--audio", va_audio)->required();
    analyze->add_option("--singer", va_singer)->required();
    analyze->add_option("--out", va_out)->required();
    analyze->add_option("--clip-id", va_clip);
    analyze->callback([&]() {
        vp::vocal::VocalTokenizer tok = vp::vocal::VocalTokenizer::load(va_vocal);
        const auto wav = vp::vocal::read_wav(va_audio);
        if (wav.sample_rate != tok.config().sample_rate)
            throw std::runtime_error("wav sample rate " + std::to_string(wav.sample_rate) +
                                     " != tokenizer rate " +
                                     std::to_string(tok.config().sample_rate));
        vp::vocal::UnitRecord rec;
        rec.clip_id = va_clip.empty() ? fs::path(va_audio).stem().string() : va_clip;
        rec.units = tok.analyze(wav.samples, va_singer);
        rec.singer_id = va_singer;
        rec.hop_seconds = tok.config().hop_seconds;
        vp::vocal::write_units_jsonl(va_out, {rec});
        std::cout << "analyzed " << rec.units.semantic_ids.size() << " frames to " << va_out << "\n";
    });

    // ------------------------------------------------ lm
    auto* lm_cmd = app.add_subcommand("lm", "token language model");
    auto* lm_train = lm_cmd->add_subcommand("train", "train on a built artifact directory");
    std::string lt_manifest, lt_artifacts, lt_cfg;
    int64_t lt_epochs = 0, lt_layers = 0, lt_dmodel = 0;
    double lt_window = 0.0;
    uint64_t lt_seed = 1;
    lm_train->add_option("--manifest", lt_manifest)->required();
    lm_train->add_option("--artifacts", lt_artifacts, "directory holding codec_*.ckpt + vocal.ckpt")
        ->required();
    lm_train->add_option("--epochs", lt_epochs);
    lm_train->add_option("--layers", lt_layers);
    lm_train->add_option("--d-model", lt_dmodel);
    lm_train->add_option("--window-seconds", lt_window, "truncate clips for the LM corpus");
    lm_train->add_option("--seed", lt_seed);
    lm_train->add_option("--config", lt_cfg);
    lm_train->callback([&]() {
        const json cfg = load_config(lt_cfg);
        merge(*lm_train, "--epochs", cfg, "epochs", lt_epochs);
        merge(*lm_train, "--layers", cfg, "layers", lt_layers);
        merge(*lm_train, "--d-model", cfg, "d_model", lt_dmodel);
        merge(*lm_train, "--window-seconds", cfg, "window_seconds", lt_window);
        merge(*lm_train, "--seed", cfg, "seed", lt_seed);

        vp::pipeline::StackPaths paths{lt_artifacts};
        vp::motion::PartCodec face = vp::motion::PartCodec::load(paths.codec(vp::motion::Part::face));
        vp::vocal::VocalTokenizer voc = vp::vocal::VocalTokenizer::load(paths.vocal());
        vp::pipeline::StackConfig sc;
        sc.codec = face.config();
        sc.vocal = voc.config();
        if (lt_epochs > 0) sc.lm.epochs = lt_epochs;
        if (lt_layers > 0) sc.lm.layers = lt_layers;
        if (lt_dmodel > 0) sc.lm.d_model = lt_dmodel;
        sc.lm_window_seconds = lt_window;
        sc.seed = lt_seed;
        const auto manifest = vp::pipeline::read_manifest_jsonl(lt_manifest);
        const auto train = vp::pipeline::load_clips(manifest, "train");
        vp::pipeline::train_lm_stage(train, sc, paths);
        std::cout << "trained lm over " << train.size() << " clips, saved " << paths.lm() << "\n";
    });

    auto* lm_generate = lm_cmd->add_subcommand("generate", "lyric -> token stream");
    std::string lg_ckpt, lg_lyric, lg_lyric_file, lg_out, lg_clip = "generated";
    int64_t lg_topk = 1, lg_max = 2048;
    double lg_temp = 1.0;
    uint64_t lg_seed = 0;
    lm_generate->add_option("--checkpoint", lg_ckpt)->required();
    lm_generate->add_option("--lyric", lg_lyric);
    lm_generate->add_option("--lyric-file", lg_lyric_file);
    lm_generate->add_option("--top-k", lg_topk);
    lm_generate->add_option("--temperature", lg_temp);
    lm_generate->add_option("--seed", lg_seed);
    lm_generate->add_option("--max-tokens", lg_max);
    lm_generate->add_option("--out", lg_out)->required();
    lm_generate->add_option("--clip-id", lg_clip);
    lm_generate->callback([&]() {
        if (lg_lyric.empty() && lg_lyric_file.empty())
            throw std::runtime_error("pass --lyric or --lyric-file");
        const std::string lyric = lg_lyric.empty() ? read_text_file(lg_lyric_file) : lg_lyric;
        vp::lm::TokenLM model = vp::lm::TokenLM::load(lg_ckpt);
        vp::lm::SamplerConfig sampler{lg_topk, lg_temp, lg_seed};
        const auto result = model.generate(lyric, sampler, lg_max);
        vp::tokens::write_streams_jsonl(lg_out, {{lg_clip, result.stream}});
        std::cout << "generated " << result.stream.ids.size() << " tokens"
                  << (result.truncated ? " (truncated)" : "") << " to " << lg_out << "\n";
    });

    // ------------------------------------------------ resynth
    auto* resynth = app.add_subcommand("resynth", "token stream -> audio");
    std::string rs_stream, rs_vocal, rs_singer, rs_out, rs_layout;
    resynth->add_option("--stream", rs_stream)->required();
    resynth->add_option("--vocal", rs_vocal)->required();
    resynth->add_option("--singer", rs_singer)->required();
    resynth->add_option("--layout", rs_layout)->required();
    resynth->add_option("--out", rs_out)->required();
    resynth->callback([&]() {
        vp::vocal::VocalTokenizer tok = vp::vocal::VocalTokenizer::load(rs_vocal);
        const auto layout = vp::tokens::read_layout_json(rs_layout);
        const auto streams = vp::tokens::read_streams_jsonl(rs_stream);
        if (streams.empty()) throw std::runtime_error("stream file is empty: " + rs_stream);
        const auto report = vp::tokens::decouple(streams[0].stream, layout);
        if (report.vocal.semantic_ids.empty())
            throw std::runtime_error("stream has no vocal tokens to resynthesize");
        vp::vocal::SynthesisConfig synth;
        synth.sample_rate = tok.config().sample_rate;
        synth.hop_seconds = tok.config().hop_seconds;
        const auto audio =
            vp::vocal::resynthesize(report.vocal, rs_singer, tok.kmeans(), tok.f0_codec(), synth);
        vp::vocal::write_wav(rs_out, audio, synth.sample_rate);
        std::cout << "resynthesized " << audio.size() << " samples to " << rs_out << "\n";
    });

    // ------------------------------------------------ evaluate
    auto* evaluate = app.add_subcommand("evaluate", "metrics");
    std::string ev_metric, ev_real, ev_gen, ev_motion, ev_audio, ev_ref, ev_hyp, ev_gt, ev_out;
    std::string ev_manifest, ev_artifacts, ev_mode = "from_mean";
    bool ev_suite = false;
    evaluate->add_option("--metric", ev_metric, "fid|div|bc|cer|gpe|vde|mpjpe");
    evaluate->add_flag("--suite", ev_suite, "full generation + reconstruction report");
    evaluate->add_option("--real", ev_real);
    evaluate->add_option("--gen", ev_gen);
    evaluate->add_option("--motion", ev_motion);
    evaluate->add_option("--audio", ev_audio);
    evaluate->add_option("--reference", ev_ref);
    evaluate->add_option("--hypothesis", ev_hyp);
    evaluate->add_option("--ref-track", ev_ref);
    evaluate->add_option("--est-track", ev_hyp);
    evaluate->add_option("--gt", ev_gt);
    evaluate->add_option("--mode", ev_mode, "diversity statistic: from_mean|pairwise");
    evaluate->add_option("--manifest", ev_manifest);
    evaluate->add_option("--artifacts", ev_artifacts);
    evaluate->add_option("--out", ev_out);
    evaluate->callback([&]() {
        if (ev_suite) {
            if (ev_manifest.empty() || ev_artifacts.empty())
                throw std::runtime_error("--suite needs --manifest and --artifacts");
            vp::pipeline::StackPaths paths{ev_artifacts};
            vp::motion::PartCodec face =
                vp::motion::PartCodec::load(paths.codec(vp::motion::Part::face));
            vp::vocal::VocalTokenizer voc = vp::vocal::VocalTokenizer::load(paths.vocal());
            vp::pipeline::StackConfig sc;
            sc.codec = face.config();
            sc.vocal = voc.config();
            const auto manifest = vp::pipeline::read_manifest_jsonl(ev_manifest);
            auto eval_clips = vp::pipeline::load_clips(manifest, "test");
            if (eval_clips.empty()) eval_clips = vp::pipeline::load_clips(manifest, "val");
            const auto report = vp::pipeline::evaluate_stage(eval_clips, sc, paths);
            std::cout << report.values.dump(2) << "\n";
            return;
        }
        vp::metrics::EvalReport report;
        if (ev_metric == "fid") {
            report.values["fid"] = vp::metrics::fid(read_feature_file(ev_real),
                                                    read_feature_file(ev_gen));
        } else if (ev_metric == "div") {
            const auto mode = ev_mode == "pairwise" ? vp::metrics::DiversityMode::pairwise
                                                    : vp::metrics::DiversityMode::from_mean;
            report.values["div"] = vp::metrics::diversity(read_feature_file(ev_gen), mode);
            report.provenance["diversity_mode"] = ev_mode;
        } else if (ev_metric == "bc") {
            const auto seq = vp::motion::read_motion_file(ev_motion);
            const auto wav = vp::vocal::read_wav(ev_audio);
            const auto bc = vp::metrics::beat_constancy(seq, wav.samples, wav.sample_rate);
            if (!bc.defined) throw std::runtime_error("bc undefined: no kinematic beats");
            report.values["bc"] = bc.bc;
        } else if (ev_metric == "cer") {
            report.values["cer"] =
                vp::metrics::cer(read_text_file(ev_ref), read_text_file(ev_hyp));
        } else if (ev_metric == "gpe" || ev_metric == "vde") {
            std::vector<double> f0r, f0e;
            std::vector<bool> vr, ve;
            read_track_file(ev_ref, f0r, vr);
            read_track_file(ev_hyp, f0e, ve);
            if (ev_metric == "gpe") {
                const auto g = vp::metrics::gpe(f0r, vr, f0e, ve);
                if (!g.defined) throw std::runtime_error("gpe undefined: no mutually voiced frame");
                report.values["gpe"] = g.percent;
            } else {
                report.values["vde"] = vp::metrics::vde(vr, ve);
            }
        } else if (ev_metric == "mpjpe") {
            const auto gen = vp::motion::read_motion_file(ev_gen);
            const auto gt = vp::motion::read_motion_file(ev_gt);
            const auto e = vp::metrics::motion_reconstruction(gen, gt);
            report.values["mpjpe"] = e.mpjpe;
            report.values["pampjpe"] = e.pampjpe;
            report.values["accl"] = e.accl;
        } else {
            throw std::runtime_error("unknown metric '" + ev_metric + "'");
        }
        for (const auto& [k, v] : report.values.items()) std::cout << k << " = " << v << "\n";
        if (!ev_out.empty()) report.save_json(ev_out);
    });

    // ------------------------------------------------ ablate
    auto* ablate = app.add_subcommand("ablate", "tokenizer ablations (codebook sweep, single vs split)");
    std::string ab_manifest, ab_out, ab_sizes = "256,512,1024";
    int64_t ab_steps = 200, ab_batch = 8, ab_k = 512, ab_dim = 64, ab_hidden = 64;
    uint64_t ab_seed = 1;
    ablate->add_option("--manifest", ab_manifest)->required();
    ablate->add_option("--sizes", ab_sizes, "comma-separated codebook sizes");
    ablate->add_option("--steps", ab_steps);
    ablate->add_option("--batch", ab_batch);
    ablate->add_option("--code-dim", ab_dim);
    ablate->add_option("--hidden", ab_hidden);
    ablate->add_option("--base-codebook", ab_k, "codebook size of the single variant");
    ablate->add_option("--seed", ab_seed);
    ablate->add_option("--out", ab_out)->required();
    ablate->callback([&]() {
        const auto manifest = vp::pipeline::read_manifest_jsonl(ab_manifest);
        const auto train_clips = vp::pipeline::load_clips(manifest, "train");
        auto eval_clips = vp::pipeline::load_clips(manifest, "test");
        if (eval_clips.empty()) eval_clips = vp::pipeline::load_clips(manifest, "val");
        if (train_clips.empty() || eval_clips.empty())
            throw std::runtime_error("ablate needs both train and eval clips");
        std::vector<vp::motion::MotionSequence> train, eval_set;
        for (const auto& c : train_clips) train.push_back(c.motion);
        for (const auto& c : eval_clips) eval_set.push_back(c.motion);

        std::vector<int64_t> sizes;
        std::stringstream ss(ab_sizes);
        std::string item;
        while (std::getline(ss, item, ',')) sizes.push_back(std::stoll(item));

        vp::motion::CodecConfig base;
        base.codebook_size = ab_k;
        base.code_dim = ab_dim;
        base.hidden = ab_hidden;
        vp::motion::AblationBudget budget;
        budget.steps = ab_steps;
        budget.batch = ab_batch;
        budget.seed = ab_seed;
        const auto rows = vp::motion::ablate_single_vs_split(train, eval_set, base, sizes, budget);
        vp::motion::write_ablation_csv(ab_out, rows);
        for (const auto& r : rows)
            std::cout << r.design << ": MPJPE " << r.errors.mpjpe << " PAMPJPE " << r.errors.pampjpe
                      << " ACCL " << r.errors.accl << "\n";
        std::cout << "table written to " << ab_out << "\n";
    });

    // ------------------------------------------------ run (full stack)
    auto* run = app.add_subcommand("run", "dataset -> codecs -> lm -> generate -> evaluate");
    std::string rn_manifest, rn_out;
    uint64_t rn_seed = 1;
    bool rn_quick = true;
    run->add_option("--manifest", rn_manifest)->required();
    run->add_option("--out", rn_out)->required();
    run->add_option("--seed", rn_seed);
    run->callback([&]() {
        vp::pipeline::StackConfig sc =
            rn_quick ? vp::pipeline::StackConfig::quick() : vp::pipeline::StackConfig{};
        sc.seed = rn_seed;
        vp::pipeline::StackPaths paths{rn_out};
        const auto report = vp::pipeline::run_stack(rn_manifest, sc, paths);
        std::cout << report.values.dump(2) << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
