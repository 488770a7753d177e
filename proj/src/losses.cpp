#include "seqforge/losses.hpp"

#include <cmath>

namespace seqforge {
namespace nn {

double softplus(double z) {
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_finite(const Tensor& t, const char* what) {
    for (size_t i = 0; i < t.numel(); ++i)
        if (!std::isfinite(t[i])) throw Error(std::string(what) + ": non-finite logits");
}

}  // namespace

double adversarial_loss_d(const Tensor& logits_real, const Tensor& logits_fake, Tensor* grad_real,
                          Tensor* grad_fake) {
    if (!logits_real.same_shape(logits_fake))
        throw Error("adversarial_loss_d: logit extent mismatch");
    check_finite(logits_real, "adversarial_loss_d");
    check_finite(logits_fake, "adversarial_loss_d");
    const double n = double(logits_real.numel());
    double acc = 0;
    if (grad_real) *grad_real = Tensor::zeros_like(logits_real);
    if (grad_fake) *grad_fake = Tensor::zeros_like(logits_fake);
    for (size_t i = 0; i < logits_real.numel(); ++i) {
        acc += 0.5 * (softplus(-double(logits_real[i])) + softplus(double(logits_fake[i])));
        if (grad_real) (*grad_real)[i] = float(-sigmoid(-double(logits_real[i])) / (2 * n));
        if (grad_fake) (*grad_fake)[i] = float(sigmoid(double(logits_fake[i])) / (2 * n));
    }
    return acc / n;
}

double adversarial_loss_g(const Tensor& logits_fake, Tensor* grad_fake) {
    check_finite(logits_fake, "adversarial_loss_g");
    const double n = double(logits_fake.numel());
    double acc = 0;
    if (grad_fake) *grad_fake = Tensor::zeros_like(logits_fake);
    for (size_t i = 0; i < logits_fake.numel(); ++i) {
        acc += softplus(-double(logits_fake[i]));
        if (grad_fake) (*grad_fake)[i] = float(-sigmoid(-double(logits_fake[i])) / n);
    }
    return acc / n;
}

GeneratorLoss generator_loss(const Tensor& logits_fake, const Tensor& y_fake,
                             const Tensor& y_target, const Tensor& mask, double lambda,
                             Tensor* grad_fake, Tensor* grad_logits) {
    if (!y_fake.same_shape(y_target)) throw Error("generator_loss: target extent mismatch");
    if (mask.n() != y_fake.n() || mask.c() != 1 || mask.h() != y_fake.h() ||
        mask.w() != y_fake.w())
        throw Error("generator_loss: mask must be (N,1,H,W) aligned with y_fake");

    GeneratorLoss out;
    out.adv = adversarial_loss_g(logits_fake, grad_logits);

    double mask_sum = 0;
    for (size_t i = 0; i < mask.numel(); ++i) mask_sum += mask[i];
    const double denom = mask_sum * y_fake.c();

    if (grad_fake) *grad_fake = Tensor::zeros_like(y_fake);
    if (mask_sum == 0) {
        out.empty_mask = true;
        out.l1 = 0;
    } else {
        double acc = 0;
        for (int n = 0; n < y_fake.n(); ++n)
            for (int c = 0; c < y_fake.c(); ++c)
                for (int y = 0; y < y_fake.h(); ++y)
                    for (int x = 0; x < y_fake.w(); ++x) {
                        float m = mask(n, 0, y, x);
                        if (m == 0.f) continue;
                        double d = double(y_fake(n, c, y, x)) - double(y_target(n, c, y, x));
                        acc += std::abs(d) * m;
                        if (grad_fake) {
                            double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                            (*grad_fake)(n, c, y, x) = float(lambda * s * m / denom);
                        }
                    }
        out.l1 = acc / denom;
    }
    out.total = out.adv + lambda * out.l1;
    return out;
}

Tensor stage1_target(const Tensor& real, const Tensor& foreground_mask) {
    if (foreground_mask.n() != real.n() || foreground_mask.c() != 1 ||
        foreground_mask.h() != real.h() || foreground_mask.w() != real.w())
        throw Error("stage1_target: mask must be (N,1,H,W) aligned with the image");
    Tensor out(real.n(), real.c(), real.h(), real.w(), -1.f);
    for (int n = 0; n < real.n(); ++n)
        for (int c = 0; c < real.c(); ++c)
            for (int y = 0; y < real.h(); ++y)
                for (int x = 0; x < real.w(); ++x)
                    if (foreground_mask(n, 0, y, x) != 0.f)
                        out(n, c, y, x) = real(n, c, y, x);
    return out;
}

}  // namespace nn
}  // namespace seqforge
