#include "vocapose/core/tensor.hpp"

#include <cmath>

namespace vp::core {

std::string shape_to_string(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_same_shape(const std::string& where, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError(where, a.shape, b.shape);
}

void check_finite(const std::string& where, const Tensor& t) {
    if (!t.all_finite()) throw std::runtime_error(where + ": non-finite value in tensor");
}

}  // namespace vp::core
