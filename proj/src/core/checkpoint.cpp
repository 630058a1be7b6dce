#include "vocapose/core/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace vp::core {

namespace {
constexpr char kMagic[4] = {'V', 'P', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
}  // namespace

void Checkpoint::put(const std::string& name, const Tensor& t, bool as_f32) {
    tensors_[name] = Entry{t, as_f32};
}

const Tensor& Checkpoint::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::out_of_range("checkpoint has no tensor named '" + name + "'");
    return it->second.tensor;
}

std::vector<std::string> Checkpoint::names() const {
    std::vector<std::string> out;
    out.reserve(tensors_.size());
    for (const auto& [k, v] : tensors_) out.push_back(k);
    return out;
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = kVersion;
    header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
    nlohmann::json list = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& [name, e] : tensors_) {
        const size_t elem = e.as_f32 ? 4 : 8;
        nlohmann::json j;
        j["name"] = name;
        j["dtype"] = e.as_f32 ? "f32" : "f64";
        j["shape"] = e.tensor.shape;
        j["offset"] = offset;
        list.push_back(std::move(j));
        offset += elem * static_cast<uint64_t>(e.tensor.numel());
    }
    header["tensors"] = std::move(list);
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    write_bytes(out, kMagic, 4);
    const uint32_t ver = kVersion;
    write_bytes(out, &ver, 4);
    const uint64_t hlen = hs.size();
    write_bytes(out, &hlen, 8);
    write_bytes(out, hs.data(), hs.size());
    for (const auto& [name, e] : tensors_) {
        if (e.as_f32) {
            std::vector<float> buf(e.tensor.data.size());
            for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(e.tensor.data[i]);
            write_bytes(out, buf.data(), buf.size() * 4);
        } else {
            write_bytes(out, e.tensor.data.data(), e.tensor.data.size() * 8);
        }
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(ver) + " in " + path);
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    const nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ck;
    ck.meta = header.value("meta", nlohmann::json::object());
    const std::streampos payload = in.tellg();
    for (const auto& j : header.at("tensors")) {
        const std::string name = j.at("name").get<std::string>();
        const std::string dtype = j.at("dtype").get<std::string>();
        const Shape shape = j.at("shape").get<Shape>();
        const uint64_t offset = j.at("offset").get<uint64_t>();
        const int64_t n = Tensor::numel_of(shape);
        Tensor t(shape);
        in.seekg(payload + static_cast<std::streamoff>(offset));
        if (dtype == "f64") {
            in.read(reinterpret_cast<char*>(t.data.data()), n * 8);
        } else if (dtype == "f32") {
            std::vector<float> buf(static_cast<size_t>(n));
            in.read(reinterpret_cast<char*>(buf.data()), n * 4);
            for (int64_t i = 0; i < n; ++i) t.data[i] = static_cast<double>(buf[static_cast<size_t>(i)]);
        } else {
            throw std::runtime_error("unknown dtype '" + dtype + "' in checkpoint " + path);
        }
        if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
        ck.tensors_[name] = Entry{std::move(t), dtype == "f32"};
    }
    return ck;
}

void Checkpoint::put_params(const ParamRefs& params) {
    for (const Parameter* p : params) put(p->name, p->value);
}

void Checkpoint::load_into(const ParamRefs& params) const {
    for (Parameter* p : params) {
        const Tensor& t = get(p->name);
        if (t.shape != p->value.shape)
            throw ShapeError("checkpoint tensor '" + p->name + "'", p->value.shape, t.shape);
        p->value = t;
    }
}

}  // namespace vp::core
