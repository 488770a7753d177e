#pragma once

#include "seqforge/tensor.hpp"

namespace seqforge {
namespace nn {

// Numerically stable log(1 + e^z).
double softplus(double z);

// Discriminator objective on raw logits: mean over patches of
// [softplus(-logit_real) + softplus(logit_fake)] / 2 (binary cross-entropy
// form of the cGAN objective). Grads are optional outputs.
double adversarial_loss_d(const Tensor& logits_real, const Tensor& logits_fake,
                          Tensor* grad_real = nullptr, Tensor* grad_fake = nullptr);

// Generator adversarial part: mean softplus(-logit_fake).
double adversarial_loss_g(const Tensor& logits_fake, Tensor* grad_fake = nullptr);

struct GeneratorLoss {
    double total = 0, adv = 0, l1 = 0;
    bool empty_mask = false;  // mask summed to zero; l1 defined as 0
};

// total = adv + lambda * l1 with l1 the per-pixel-per-channel mean absolute
// error over the masked region. `mask` is (N,1,H,W) in {0,1} and broadcasts
// over channels; pass an all-ones mask for the plain L1. grad_fake, when
// given, receives d total / d y_fake.
GeneratorLoss generator_loss(const Tensor& logits_fake, const Tensor& y_fake,
                             const Tensor& y_target, const Tensor& mask, double lambda,
                             Tensor* grad_fake = nullptr, Tensor* grad_logits = nullptr);

// Stage-1 target: the real image inside the foreground mask, -1 (black in
// network range) outside.
Tensor stage1_target(const Tensor& real, const Tensor& foreground_mask);

}  // namespace nn
}  // namespace seqforge
