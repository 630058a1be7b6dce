#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/motion/types.hpp"
#include "vocapose/vocal/types.hpp"

namespace vp::tokens {

enum class Kind { special, hubert, pitch, face, body, hand };
const char* kind_name(Kind k);

// Disjoint contiguous id ranges per token kind:
//   [0,4) specials | hubert | pitch | face | body | hand
// Specials: 0 start_vocal, 1 start_motion, 2 end, 3 pad.
struct VocabLayout {
    int64_t hubert_width = 500;
    int64_t pitch_width = 20;
    int64_t face_width = 512;
    int64_t body_width = 512;
    int64_t hand_width = 512;

    static constexpr int32_t kStartVocal = 0;
    static constexpr int32_t kStartMotion = 1;
    static constexpr int32_t kEnd = 2;
    static constexpr int32_t kPad = 3;
    static constexpr int64_t kNumSpecials = 4;

    int64_t lo(Kind k) const;
    int64_t hi(Kind k) const { return lo(k) + width(k); }
    int64_t width(Kind k) const;
    int64_t total() const { return hi(Kind::hand); }

    Kind kind_of(int32_t id) const;
    // Global id <-> index local to the kind's own codebook/cluster space.
    int32_t encode(Kind k, int32_t local_id) const;
    int32_t local(int32_t id) const;

    nlohmann::json to_json() const;
    static VocabLayout from_json(const nlohmann::json& j);
};

struct TokenStream {
    std::vector<int32_t> ids;
};

// (face, body, hand) triples, ids offset into the layout.
TokenStream interleave_motion(const motion::PartTokenSeq& face, const motion::PartTokenSeq& body,
                              const motion::PartTokenSeq& hand, const VocabLayout& layout);
// (hubert, pitch) pairs, ids offset into the layout.
TokenStream interleave_vocal(const std::vector<int32_t>& semantic_ids,
                             const std::vector<int32_t>& pitch_ids, const VocabLayout& layout);
// [start_vocal] + vocal + [start_motion] + motion + [end]
TokenStream mix(const TokenStream& vocal, const TokenStream& motion, const VocabLayout& layout);

enum class DecouplePolicy { strict, skip_and_log };

struct DecoupleParams {
    DecouplePolicy policy = DecouplePolicy::skip_and_log;
    // Duration consistency check, active when hop_seconds, fps and downsample
    // are all set: warn when |L_s*hop - triples*downsample/fps| > tolerance.
    double hop_seconds = 0.0;
    double fps = 0.0;
    int64_t downsample = 0;
    double tolerance_s = 0.25;
};

struct Violation {
    int64_t position = 0;  // index within the segment (start token excluded)
    Kind expected = Kind::special;
    Kind actual = Kind::special;
};

struct DecoupleReport {
    vocal::UnitSeq vocal;
    motion::PartTokenSeq face{motion::Part::face, {}};
    motion::PartTokenSeq body{motion::Part::body, {}};
    motion::PartTokenSeq hand{motion::Part::hand, {}};
    std::vector<Violation> violations;
    int64_t truncated_tail = 0;   // tokens dropped from abandoned partial groups
    bool missing_motion = false;  // no start_motion in the stream
    bool duration_warning = false;
};

// Splits a mixed stream at its start tokens and re-enforces the periodic
// patterns, mapping ids back to local indices. Never emits a partial pair or
// triple. On a pattern break the in-progress partial group is discarded into
// truncated_tail, one violation is logged, and scanning restarts at the
// offending token. strict policy turns the first violation into an error.
DecoupleReport decouple(const TokenStream& stream, const VocabLayout& layout,
                        const DecoupleParams& params = {});

void write_layout_json(const std::string& path, const VocabLayout& layout);
VocabLayout read_layout_json(const std::string& path);

// Token stream files are JSON-lines: {"clip_id": ..., "ids": [...]}.
struct NamedStream {
    std::string clip_id;
    TokenStream stream;
};
void write_streams_jsonl(const std::string& path, const std::vector<NamedStream>& streams);
std::vector<NamedStream> read_streams_jsonl(const std::string& path);

}  // namespace vp::tokens
