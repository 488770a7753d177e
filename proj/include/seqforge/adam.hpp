#pragma once

#include <cstdint>
#include <vector>

#include "seqforge/layers.hpp"

namespace seqforge {
namespace nn {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Classic Adam with bias correction over a fixed parameter list. Moment
// slots are keyed by list order, which is stable per network.
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, const std::vector<ParamRef>& params);

    // Applies one update from the accumulated gradients.
    void step(const std::vector<ParamRef>& params);

    int64_t t() const { return t_; }
    void set_t(int64_t t) { t_ = t; }
    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }

    // Moment tensors exposed for checkpointing, aligned with the param list.
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }

private:
    AdamConfig config_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace nn
}  // namespace seqforge
