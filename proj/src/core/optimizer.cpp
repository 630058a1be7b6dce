#include "vocapose/core/optimizer.hpp"

#include <cmath>

namespace vp::core {

void adam_step(const ParamRefs& params, const AdamConfig& cfg, int64_t step) {
    cfg.validate();
    if (step < 1) throw std::invalid_argument("adam: step must be >= 1");
    for (Parameter* p : params) {
        if (!p->grad.all_finite())
            throw std::runtime_error("training step aborted: non-finite gradient in parameter '" +
                                     p->name + "'");
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (Parameter* p : params) {
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad.data[i];
            double& m = p->adam_m.data[i];
            double& v = p->adam_v.data[i];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p->value.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
        p->zero_grad();
    }
}

}  // namespace vp::core
