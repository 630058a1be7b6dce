#include "vocapose/motion/types.hpp"

#include <cstring>
#include <fstream>

namespace vp::motion {

const char* part_name(Part p) {
    switch (p) {
        case Part::face: return "face";
        case Part::body: return "body";
        case Part::hand: return "hand";
    }
    return "?";
}

Part part_from_name(const std::string& name) {
    if (name == "face") return Part::face;
    if (name == "body") return Part::body;
    if (name == "hand") return Part::hand;
    throw std::invalid_argument("unknown motion part '" + name + "' (face|body|hand)");
}

int64_t part_dim(Part p) {
    switch (p) {
        case Part::face: return kJawDim + kExprDim;
        case Part::body: return kBodyDim + kTransDim;
        case Part::hand: return kHandDim;
    }
    return 0;
}

MotionSequence::MotionSequence(core::Tensor f, double fps_) : frames(std::move(f)), fps(fps_) {
    if (frames.rank() != 2 || frames.shape[1] != kFrameDim)
        throw core::ShapeError("motion sequence", {-1, kFrameDim}, frames.shape);
    if (frames.shape[0] < 1) throw std::invalid_argument("motion sequence needs at least one frame");
    if (fps <= 0.0) throw std::invalid_argument("motion sequence fps must be > 0");
    core::check_finite("motion sequence", frames);
}

namespace {
// (offset, width) pieces of a part, in frame-column order.
std::vector<std::pair<int64_t, int64_t>> part_pieces(Part p) {
    switch (p) {
        case Part::face: return {{kJawOffset, kJawDim}, {kExprOffset, kExprDim}};
        case Part::body: return {{kBodyOffset, kBodyDim}, {kTransOffset, kTransDim}};
        case Part::hand: return {{kHandOffset, kHandDim}};
    }
    return {};
}
}  // namespace

core::Tensor MotionSequence::extract_part(Part p) const {
    const int64_t t = length();
    core::Tensor out({t, part_dim(p)});
    for (int64_t i = 0; i < t; ++i) {
        int64_t col = 0;
        for (auto [off, width] : part_pieces(p)) {
            for (int64_t j = 0; j < width; ++j) out.at(i, col + j) = frames.at(i, off + j);
            col += width;
        }
    }
    return out;
}

void MotionSequence::insert_part(Part p, const core::Tensor& values) {
    const int64_t t = length();
    if (values.rank() != 2 || values.shape[0] != t || values.shape[1] != part_dim(p))
        throw core::ShapeError("insert_part(" + std::string(part_name(p)) + ")", {t, part_dim(p)},
                               values.shape);
    for (int64_t i = 0; i < t; ++i) {
        int64_t col = 0;
        for (auto [off, width] : part_pieces(p)) {
            for (int64_t j = 0; j < width; ++j) frames.at(i, off + j) = values.at(i, col + j);
            col += width;
        }
    }
}

namespace {
constexpr char kMagic[4] = {'V', 'P', 'M', 'O'};
constexpr uint32_t kVersion = 1;
}  // namespace

void write_motion_file(const std::string& path, const MotionSequence& seq) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open motion file for writing: " + path);
    out.write(kMagic, 4);
    const uint32_t ver = kVersion;
    out.write(reinterpret_cast<const char*>(&ver), 4);
    const float fps = static_cast<float>(seq.fps);
    out.write(reinterpret_cast<const char*>(&fps), 4);
    const uint32_t t = static_cast<uint32_t>(seq.length());
    out.write(reinterpret_cast<const char*>(&t), 4);
    const std::string layout = kLayoutString;
    const uint32_t ll = static_cast<uint32_t>(layout.size());
    out.write(reinterpret_cast<const char*>(&ll), 4);
    out.write(layout.data(), ll);
    std::vector<float> buf(seq.frames.data.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(seq.frames.data[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!out) throw std::runtime_error("failed writing motion file: " + path);
}

MotionSequence read_motion_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open motion file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a motion file (bad magic): " + path);
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kVersion)
        throw std::runtime_error("unsupported motion file version " + std::to_string(ver));
    float fps = 0.0f;
    in.read(reinterpret_cast<char*>(&fps), 4);
    uint32_t t = 0;
    in.read(reinterpret_cast<char*>(&t), 4);
    uint32_t ll = 0;
    in.read(reinterpret_cast<char*>(&ll), 4);
    std::string layout(ll, '\0');
    in.read(layout.data(), ll);
    if (layout != kLayoutString)
        throw std::runtime_error("motion file layout '" + layout + "' != expected '" + kLayoutString +
                                 "'");
    std::vector<float> buf(static_cast<size_t>(t) * kFrameDim);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in) throw std::runtime_error("truncated motion file: " + path);
    core::Tensor frames({static_cast<int64_t>(t), kFrameDim});
    for (size_t i = 0; i < buf.size(); ++i) frames.data[i] = static_cast<double>(buf[i]);
    return MotionSequence(std::move(frames), static_cast<double>(fps));
}

}  // namespace vp::motion
