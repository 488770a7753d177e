#include "seqforge/adam.hpp"

#include <cmath>

namespace seqforge {
namespace nn {

Adam::Adam(AdamConfig config, const std::vector<ParamRef>& params) : config_(config) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.push_back(Tensor::zeros_like(*p.value));
        v_.push_back(Tensor::zeros_like(*p.value));
    }
}

void Adam::step(const std::vector<ParamRef>& params) {
    if (params.size() != m_.size()) throw Error("Adam: parameter list changed size");
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double corr1 = 1.0 - std::pow(b1, double(t_));
    const double corr2 = 1.0 - std::pow(b2, double(t_));
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& value = *params[p].value;
        const Tensor& grad = *params[p].grad;
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        for (size_t i = 0; i < value.numel(); ++i) {
            double g = grad[i];
            double mi = b1 * m[i] + (1 - b1) * g;
            double vi = b2 * v[i] + (1 - b2) * g * g;
            m[i] = float(mi);
            v[i] = float(vi);
            double mhat = mi / corr1;
            double vhat = vi / corr2;
            value[i] = float(value[i] - config_.learning_rate * mhat / (std::sqrt(vhat) +
                                                                        config_.eps));
        }
    }
}

}  // namespace nn
}  // namespace seqforge
