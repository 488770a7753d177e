#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqforge/rng.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {
namespace nn {

// Trainable parameter reference used by the optimizer and checkpoints.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// Non-trainable state (normalization running statistics).
struct BufferRef {
    std::string name;
    Tensor* value;
};

struct Context {
    bool training = false;
    RngStream* rng = nullptr;  // required when training (dropout masks)
};

// All layers cache what backward needs during forward; a layer instance is
// single-writer during training, read-only snapshots may be shared for
// inference.

class Conv2d {
public:
    Conv2d() = default;
    // Asymmetric padding supports 'same' stride-1 layers with even kernels.
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad_top, int pad_bottom,
           int pad_left, int pad_right);
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
        : Conv2d(in_ch, out_ch, kernel, stride, pad, pad, pad, pad) {}

    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

    void init(RngStream& rng, float stddev = 0.02f);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);

    int out_height(int in_h) const { return (in_h + pad_top_ + pad_bottom_ - kernel_) / stride_ + 1; }
    int out_width(int in_w) const { return (in_w + pad_left_ + pad_right_ - kernel_) / stride_ + 1; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

    Tensor weight, bias, gweight, gbias;  // weight: (out, in, k, k)

private:
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1;
    int pad_top_ = 0, pad_bottom_ = 0, pad_left_ = 0, pad_right_ = 0;
    Tensor x_cache_;
};

class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad);

    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

    void init(RngStream& rng, float stddev = 0.02f);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);

    int out_height(int in_h) const { return (in_h - 1) * stride_ - 2 * pad_ + kernel_; }
    int out_width(int in_w) const { return (in_w - 1) * stride_ - 2 * pad_ + kernel_; }

    Tensor weight, bias, gweight, gbias;  // weight: (in, out, k, k)

private:
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
    Tensor x_cache_;
};

class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);

    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    Tensor gamma, beta, ggamma, gbeta;
    Tensor running_mean, running_var;

private:
    int channels_ = 0;
    float momentum_ = 0.1f, eps_ = 1e-5f;
    bool trained_forward_ = false;
    Tensor xhat_cache_;
    std::vector<float> inv_std_cache_;
};

class PReLU {
public:
    PReLU() = default;
    explicit PReLU(int channels, float initial_slope = 0.25f);

    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);

    Tensor slope, gslope;  // per-channel a, shape (1,C,1,1)

private:
    Tensor x_cache_;
};

class ReLU {
public:
    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_cache_;
};

class LeakyReLU {
public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

private:
    float slope_;
    Tensor x_cache_;
};

class Tanh {
public:
    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

private:
    Tensor y_cache_;
};

// Inverted dropout; identity in eval mode.
class Dropout {
public:
    explicit Dropout(float drop_prob = 0.5f) : drop_prob_(drop_prob) {}
    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

private:
    float drop_prob_;
    Tensor mask_cache_;
    bool active_ = false;
};

// Elementwise PReLU used by the operation-level API: y = x for x > 0,
// slope_c * x otherwise.
Tensor prelu(const Tensor& x, const Tensor& slope);

}  // namespace nn
}  // namespace seqforge
