#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace vp::core {

using Shape = std::vector<int64_t>;

std::string shape_to_string(const Shape& s);

// Dense row-major tensor of doubles. All training-path math runs in 64-bit;
// file formats that store 32-bit data convert at the I/O boundary.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(static_cast<size_t>(numel_of(shape)), 0.0) {}
    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != numel_of(shape)) {
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_to_string(shape));
        }
    }

    static int64_t numel_of(const Shape& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_to_string(s));
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t dim(size_t i) const { return shape.at(i); }
    size_t rank() const { return shape.size(); }

    double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
    double at(int64_t i) const { return data[static_cast<size_t>(i)]; }
    double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
    double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, double v) {
        Tensor t(std::move(s));
        for (double& x : t.data) x = v;
        return t;
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

// Shape mismatches carry both sides so callers can report them verbatim.
struct ShapeError : std::runtime_error {
    ShapeError(const std::string& where, const Shape& expected, const Shape& actual)
        : std::runtime_error(where + ": expected shape " + shape_to_string(expected) +
                             ", got " + shape_to_string(actual)) {}
    ShapeError(const std::string& where, const std::string& detail) : std::runtime_error(where + ": " + detail) {}
};

void check_same_shape(const std::string& where, const Tensor& a, const Tensor& b);
void check_finite(const std::string& where, const Tensor& t);

}  // namespace vp::core
