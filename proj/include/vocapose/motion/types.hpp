#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vocapose/core/tensor.hpp"

namespace vp::motion {

// Column layout of a pose frame: jaw(3) | body(63) | hand(90) | expr(100) | trans(3).
constexpr int64_t kJawDim = 3;
constexpr int64_t kBodyDim = 63;
constexpr int64_t kHandDim = 90;
constexpr int64_t kExprDim = 100;
constexpr int64_t kTransDim = 3;
constexpr int64_t kFrameDim = kJawDim + kBodyDim + kHandDim + kExprDim + kTransDim;  // 259
constexpr const char* kLayoutString = "jaw3|body63|hand90|expr100|trans3";

constexpr int64_t kJawOffset = 0;
constexpr int64_t kBodyOffset = kJawOffset + kJawDim;
constexpr int64_t kHandOffset = kBodyOffset + kBodyDim;
constexpr int64_t kExprOffset = kHandOffset + kHandDim;
constexpr int64_t kTransOffset = kExprOffset + kExprDim;

enum class Part { face, body, hand };

const char* part_name(Part p);
Part part_from_name(const std::string& name);

// face codec sees jaw+expression, body codec sees body pose+translation.
int64_t part_dim(Part p);  // face 103, body 66, hand 90

struct MotionSequence {
    core::Tensor frames;  // [T, 259]
    double fps = 0.0;

    MotionSequence() = default;
    MotionSequence(core::Tensor f, double fps_);

    int64_t length() const { return frames.rank() == 2 ? frames.shape[0] : 0; }

    // Gather this part's columns into a [T, part_dim] matrix, and scatter back.
    core::Tensor extract_part(Part p) const;
    void insert_part(Part p, const core::Tensor& values);
};

// Binary motion file: magic "VPMO", u32 version, f32 fps, u32 T,
// u32 layout-string length + bytes, then T*259 row-major f32 frames (LE).
void write_motion_file(const std::string& path, const MotionSequence& seq);
MotionSequence read_motion_file(const std::string& path);

struct PartTokenSeq {
    Part part = Part::face;
    std::vector<int32_t> ids;
};

}  // namespace vp::motion
