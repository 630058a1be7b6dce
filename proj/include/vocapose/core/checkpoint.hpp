#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocapose/core/tape.hpp"
#include "vocapose/core/tensor.hpp"

namespace vp::core {

// Versioned binary container of named tensors with a JSON header:
//
//   bytes 0..3   magic "VPCK"
//   bytes 4..7   u32 version (little-endian), currently 1
//   bytes 8..15  u64 header length in bytes (little-endian)
//   header       UTF-8 JSON: {"version", "meta", "tensors": [{name, dtype,
//                shape, offset}]} with offsets relative to the payload start
//   payload      raw little-endian tensor data, in tensor-list order
//
// dtype is "f64" (8-byte IEEE754) or "f32". Everything loads back as f64.
class Checkpoint {
public:
    void put(const std::string& name, const Tensor& t, bool as_f32 = false);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return tensors_.count(name) > 0; }
    std::vector<std::string> names() const;

    nlohmann::json meta;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    // Convenience: snapshot/restore a whole parameter set (values only;
    // optimizer moments are training state, not model state).
    void put_params(const ParamRefs& params);
    void load_into(const ParamRefs& params) const;

private:
    struct Entry {
        Tensor tensor;
        bool as_f32 = false;
    };
    std::map<std::string, Entry> tensors_;  // ordered so files are reproducible
};

}  // namespace vp::core
