#include "vocapose/tokens/token_space.hpp"

#include <cmath>
#include <fstream>

namespace vp::tokens {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::special: return "special";
        case Kind::hubert: return "hubert";
        case Kind::pitch: return "pitch";
        case Kind::face: return "face";
        case Kind::body: return "body";
        case Kind::hand: return "hand";
    }
    return "?";
}

int64_t VocabLayout::width(Kind k) const {
    switch (k) {
        case Kind::special: return kNumSpecials;
        case Kind::hubert: return hubert_width;
        case Kind::pitch: return pitch_width;
        case Kind::face: return face_width;
        case Kind::body: return body_width;
        case Kind::hand: return hand_width;
    }
    return 0;
}

int64_t VocabLayout::lo(Kind k) const {
    int64_t off = 0;
    for (Kind q : {Kind::special, Kind::hubert, Kind::pitch, Kind::face, Kind::body, Kind::hand}) {
        if (q == k) return off;
        off += width(q);
    }
    return off;
}

Kind VocabLayout::kind_of(int32_t id) const {
    if (id < 0 || id >= total())
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary [0, " +
                                std::to_string(total()) + ")");
    for (Kind q : {Kind::special, Kind::hubert, Kind::pitch, Kind::face, Kind::body, Kind::hand}) {
        if (id < hi(q)) return q;
    }
    return Kind::hand;
}

int32_t VocabLayout::encode(Kind k, int32_t local_id) const {
    if (local_id < 0 || local_id >= width(k))
        throw std::out_of_range(std::string("local ") + kind_name(k) + " id " +
                                std::to_string(local_id) + " outside width " +
                                std::to_string(width(k)));
    return static_cast<int32_t>(lo(k) + local_id);
}

int32_t VocabLayout::local(int32_t id) const {
    return static_cast<int32_t>(id - lo(kind_of(id)));
}

nlohmann::json VocabLayout::to_json() const {
    nlohmann::json j;
    for (Kind q : {Kind::special, Kind::hubert, Kind::pitch, Kind::face, Kind::body, Kind::hand})
        j["ranges"][kind_name(q)] = {lo(q), hi(q)};
    j["specials"] = {{"start_vocal", kStartVocal},
                     {"start_motion", kStartMotion},
                     {"end", kEnd},
                     {"pad", kPad}};
    return j;
}

VocabLayout VocabLayout::from_json(const nlohmann::json& j) {
    VocabLayout l;
    auto w = [&](const char* name) {
        const auto& r = j.at("ranges").at(name);
        return r.at(1).get<int64_t>() - r.at(0).get<int64_t>();
    };
    l.hubert_width = w("hubert");
    l.pitch_width = w("pitch");
    l.face_width = w("face");
    l.body_width = w("body");
    l.hand_width = w("hand");
    // ranges must be contiguous in the canonical order
    int64_t off = 0;
    for (Kind q : {Kind::special, Kind::hubert, Kind::pitch, Kind::face, Kind::body, Kind::hand}) {
        const auto& r = j.at("ranges").at(kind_name(q));
        if (r.at(0).get<int64_t>() != off)
            throw std::runtime_error(std::string("layout range for ") + kind_name(q) +
                                     " is not contiguous with preceding ranges");
        off = r.at(1).get<int64_t>();
    }
    return l;
}

namespace {
void check_local_ids(const char* what, const std::vector<int32_t>& ids, int64_t width) {
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= width)
            throw std::out_of_range(std::string(what) + " id " + std::to_string(ids[i]) +
                                    " at position " + std::to_string(i) + " outside [0, " +
                                    std::to_string(width) + ")");
    }
}
}  // namespace

TokenStream interleave_motion(const motion::PartTokenSeq& face, const motion::PartTokenSeq& body,
                              const motion::PartTokenSeq& hand, const VocabLayout& layout) {
    if (face.ids.size() != body.ids.size() || body.ids.size() != hand.ids.size())
        throw std::invalid_argument("interleave_motion: length mismatch face=" +
                                    std::to_string(face.ids.size()) + " body=" +
                                    std::to_string(body.ids.size()) + " hand=" +
                                    std::to_string(hand.ids.size()));
    check_local_ids("face", face.ids, layout.face_width);
    check_local_ids("body", body.ids, layout.body_width);
    check_local_ids("hand", hand.ids, layout.hand_width);
    TokenStream out;
    out.ids.reserve(face.ids.size() * 3);
    for (size_t i = 0; i < face.ids.size(); ++i) {
        out.ids.push_back(layout.encode(Kind::face, face.ids[i]));
        out.ids.push_back(layout.encode(Kind::body, body.ids[i]));
        out.ids.push_back(layout.encode(Kind::hand, hand.ids[i]));
    }
    return out;
}

TokenStream interleave_vocal(const std::vector<int32_t>& semantic_ids,
                             const std::vector<int32_t>& pitch_ids, const VocabLayout& layout) {
    if (semantic_ids.size() != pitch_ids.size())
        throw std::invalid_argument("interleave_vocal: length mismatch semantic=" +
                                    std::to_string(semantic_ids.size()) + " pitch=" +
                                    std::to_string(pitch_ids.size()));
    check_local_ids("semantic", semantic_ids, layout.hubert_width);
    check_local_ids("pitch", pitch_ids, layout.pitch_width);
    TokenStream out;
    out.ids.reserve(semantic_ids.size() * 2);
    for (size_t i = 0; i < semantic_ids.size(); ++i) {
        out.ids.push_back(layout.encode(Kind::hubert, semantic_ids[i]));
        out.ids.push_back(layout.encode(Kind::pitch, pitch_ids[i]));
    }
    return out;
}

TokenStream mix(const TokenStream& vocal, const TokenStream& motion, const VocabLayout& layout) {
    TokenStream out;
    out.ids.reserve(vocal.ids.size() + motion.ids.size() + 3);
    out.ids.push_back(VocabLayout::kStartVocal);
    out.ids.insert(out.ids.end(), vocal.ids.begin(), vocal.ids.end());
    out.ids.push_back(VocabLayout::kStartMotion);
    out.ids.insert(out.ids.end(), motion.ids.begin(), motion.ids.end());
    out.ids.push_back(VocabLayout::kEnd);
    (void)layout;
    return out;
}

namespace {

struct SegmentScan {
    std::vector<std::vector<int32_t>> lanes;  // one per pattern slot, local ids
    std::vector<Violation> violations;
    int64_t truncated = 0;
};

SegmentScan scan_segment(const std::vector<int32_t>& seg, const std::vector<Kind>& pattern,
                         const VocabLayout& layout, DecouplePolicy policy) {
    SegmentScan out;
    out.lanes.resize(pattern.size());
    std::vector<int32_t> partial;
    size_t slot = 0;
    for (size_t pos = 0; pos < seg.size(); ++pos) {
        const Kind k = layout.kind_of(seg[pos]);
        if (k == pattern[slot]) {
            partial.push_back(layout.local(seg[pos]));
            if (++slot == pattern.size()) {
                for (size_t s = 0; s < pattern.size(); ++s) out.lanes[s].push_back(partial[s]);
                partial.clear();
                slot = 0;
            }
            continue;
        }
        if (policy == DecouplePolicy::strict)
            throw std::runtime_error("decouple(strict): at segment position " + std::to_string(pos) +
                                     " expected " + kind_name(pattern[slot]) + " token, got " +
                                     kind_name(k));
        out.violations.push_back(Violation{static_cast<int64_t>(pos), pattern[slot], k});
        out.truncated += static_cast<int64_t>(partial.size());
        partial.clear();
        slot = 0;
        if (k == pattern[0]) {
            partial.push_back(layout.local(seg[pos]));
            slot = 1;
        }
    }
    out.truncated += static_cast<int64_t>(partial.size());
    return out;
}

}  // namespace

DecoupleReport decouple(const TokenStream& stream, const VocabLayout& layout,
                        const DecoupleParams& params) {
    if (stream.ids.empty()) throw std::invalid_argument("decouple: empty stream");
    for (int32_t id : stream.ids) (void)layout.kind_of(id);  // validates range
    if (stream.ids[0] != VocabLayout::kStartVocal)
        throw std::runtime_error("decouple: stream does not begin with the start_vocal token (got id " +
                                 std::to_string(stream.ids[0]) + ")");

    // Split into vocal segment and optional motion segment; scanning stops at end.
    std::vector<int32_t> vocal_seg, motion_seg;
    bool saw_start_motion = false;
    bool in_motion = false;
    for (size_t i = 1; i < stream.ids.size(); ++i) {
        const int32_t id = stream.ids[i];
        if (id == VocabLayout::kEnd) break;
        if (id == VocabLayout::kStartMotion && !in_motion) {
            saw_start_motion = true;
            in_motion = true;
            continue;
        }
        (in_motion ? motion_seg : vocal_seg).push_back(id);
    }

    DecoupleReport report;
    report.missing_motion = !saw_start_motion;

    SegmentScan vs = scan_segment(vocal_seg, {Kind::hubert, Kind::pitch}, layout, params.policy);
    report.vocal.semantic_ids = std::move(vs.lanes[0]);
    report.vocal.pitch_ids = std::move(vs.lanes[1]);
    report.violations = std::move(vs.violations);
    report.truncated_tail = vs.truncated;

    SegmentScan ms = scan_segment(motion_seg, {Kind::face, Kind::body, Kind::hand}, layout,
                                  params.policy);
    report.face.ids = std::move(ms.lanes[0]);
    report.body.ids = std::move(ms.lanes[1]);
    report.hand.ids = std::move(ms.lanes[2]);
    report.violations.insert(report.violations.end(), ms.violations.begin(), ms.violations.end());
    report.truncated_tail += ms.truncated;

    if (params.hop_seconds > 0.0 && params.fps > 0.0 && params.downsample > 0) {
        const double vocal_s = static_cast<double>(report.vocal.semantic_ids.size()) * params.hop_seconds;
        const double motion_s = static_cast<double>(report.face.ids.size()) *
                                static_cast<double>(params.downsample) / params.fps;
        if (std::abs(vocal_s - motion_s) > params.tolerance_s) report.duration_warning = true;
    }
    return report;
}

void write_layout_json(const std::string& path, const VocabLayout& layout) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write layout json: " + path);
    out << layout.to_json().dump(2) << "\n";
}

VocabLayout read_layout_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read layout json: " + path);
    nlohmann::json j;
    in >> j;
    return VocabLayout::from_json(j);
}

void write_streams_jsonl(const std::string& path, const std::vector<NamedStream>& streams) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write token stream file: " + path);
    for (const auto& s : streams) {
        nlohmann::json j;
        j["clip_id"] = s.clip_id;
        j["ids"] = s.stream.ids;
        out << j.dump() << "\n";
    }
}

std::vector<NamedStream> read_streams_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read token stream file: " + path);
    std::vector<NamedStream> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        NamedStream s;
        s.clip_id = j.at("clip_id").get<std::string>();
        s.stream.ids = j.at("ids").get<std::vector<int32_t>>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace vp::tokens
