#include "vocapose/motion/ablation.hpp"

namespace vp::motion {

namespace {

using core::Tensor;

std::vector<Tensor> full_frame_windows(const std::vector<MotionSequence>& seqs, int64_t window) {
    std::vector<Tensor> out;
    for (const MotionSequence& s : seqs) {
        auto w = cut_windows(s.frames, window);
        for (auto& t : w) out.push_back(std::move(t));
    }
    return out;
}

Tensor truncate_rows(const Tensor& t, int64_t rows) {
    Tensor out({rows, t.shape[1]});
    std::copy_n(t.data.begin(), rows * t.shape[1], out.data.begin());
    return out;
}

metrics::ReconstructionErrors eval_split(std::vector<PartCodec>& codecs,
                                         const std::vector<MotionSequence>& eval) {
    metrics::ReconstructionErrors sum;
    for (const MotionSequence& gt : eval) {
        MotionSequence rebuilt = gt;
        const Part parts[] = {Part::face, Part::body, Part::hand};
        for (size_t i = 0; i < 3; ++i) {
            const Tensor part = gt.extract_part(parts[i]);
            const Tensor dec = codecs[i].decode_ids(codecs[i].encode_ids(part));
            rebuilt.insert_part(parts[i], truncate_rows(dec, gt.length()));
        }
        const metrics::ReconstructionErrors e = metrics::motion_reconstruction(rebuilt, gt);
        sum.mpjpe += e.mpjpe;
        sum.pampjpe += e.pampjpe;
        sum.accl += e.accl;
    }
    const double n = static_cast<double>(eval.size());
    return {sum.mpjpe / n, sum.pampjpe / n, sum.accl / n};
}

metrics::ReconstructionErrors eval_single(PartCodec& codec,
                                          const std::vector<MotionSequence>& eval) {
    metrics::ReconstructionErrors sum;
    for (const MotionSequence& gt : eval) {
        const Tensor dec = codec.decode_ids(codec.encode_ids(gt.frames));
        MotionSequence rebuilt(truncate_rows(dec, gt.length()), gt.fps);
        const metrics::ReconstructionErrors e = metrics::motion_reconstruction(rebuilt, gt);
        sum.mpjpe += e.mpjpe;
        sum.pampjpe += e.pampjpe;
        sum.accl += e.accl;
    }
    const double n = static_cast<double>(eval.size());
    return {sum.mpjpe / n, sum.pampjpe / n, sum.accl / n};
}

}  // namespace

std::vector<AblationRow> ablate_single_vs_split(const std::vector<MotionSequence>& train,
                                                const std::vector<MotionSequence>& eval,
                                                const CodecConfig& base,
                                                const std::vector<int64_t>& codebook_sizes,
                                                const AblationBudget& budget) {
    if (train.empty() || eval.empty())
        throw std::invalid_argument("ablation: train and eval sets must be nonempty");
    core::AdamConfig adam;
    adam.learning_rate = budget.learning_rate;

    std::vector<AblationRow> rows;
    for (int64_t k : codebook_sizes) {
        CodecConfig cfg = base;
        cfg.codebook_size = k;
        std::vector<PartCodec> codecs;
        const Part parts[] = {Part::face, Part::body, Part::hand};
        for (size_t i = 0; i < 3; ++i) {
            codecs.emplace_back(std::string("ablate_") + part_name(parts[i]), part_dim(parts[i]),
                                cfg, budget.seed + i);
            std::vector<Tensor> windows;
            for (const MotionSequence& s : train) {
                auto w = cut_windows(s.extract_part(parts[i]), cfg.window_length);
                for (auto& t : w) windows.push_back(std::move(t));
            }
            codecs.back().fit_normalizer(windows);
            train_codec(codecs.back(), windows, adam, budget.steps, budget.batch,
                        budget.seed * 31 + i);
        }
        rows.push_back(AblationRow{"K=" + std::to_string(k), eval_split(codecs, eval)});
    }

    {
        PartCodec single("ablate_single", motion::kFrameDim, base, budget.seed + 9);
        std::vector<Tensor> windows = full_frame_windows(train, base.window_length);
        single.fit_normalizer(windows);
        train_codec(single, windows, adam, budget.steps, budget.batch, budget.seed * 31 + 9);
        rows.push_back(AblationRow{"single", eval_single(single, eval)});
    }
    return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const AblationRow& r : rows)
        cells.push_back({r.design, std::to_string(r.errors.mpjpe), std::to_string(r.errors.pampjpe),
                         std::to_string(r.errors.accl)});
    metrics::write_csv(path, {"design", "MPJPE", "PAMPJPE", "ACCL"}, cells);
}

}  // namespace vp::motion
