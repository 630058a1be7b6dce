#pragma once

#include <cstdint>

#include "vocapose/core/tape.hpp"

namespace vp::core {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double learning_rate = 0.0002;
    double epsilon = 1e-8;

    void validate() const {
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw std::invalid_argument("adam: betas must lie in [0, 1)");
        if (learning_rate <= 0.0) throw std::invalid_argument("adam: learning rate must be > 0");
        if (epsilon <= 0.0) throw std::invalid_argument("adam: epsilon must be > 0");
    }
};

// One bias-corrected Adam update at the given 1-based step. Zeroes gradients
// afterwards. Aborts (leaving values untouched) on a non-finite gradient,
// reporting which parameter carried it.
void adam_step(const ParamRefs& params, const AdamConfig& cfg, int64_t step);

// Stateful wrapper that tracks the step count.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    void step(const ParamRefs& params) { adam_step(params, cfg_, ++step_count_); }
    int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    int64_t step_count_ = 0;
};

}  // namespace vp::core
