#include "seqforge/layers.hpp"

#include <Eigen/Core>
#include <cmath>

namespace seqforge {
namespace nn {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

// im2col over one sample: (C*k*k) x (oh*ow) patch matrix.
void im2col(const float* x, int C, int H, int W, int kernel, int stride, int pad_top,
            int pad_left, int oh, int ow, float* col) {
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                float* row = col + (size_t(c) * kernel * kernel + ky * kernel + kx) *
                                       (size_t(oh) * ow);
                for (int y = 0; y < oh; ++y) {
                    int sy = y * stride - pad_top + ky;
                    if (sy < 0 || sy >= H) {
                        std::fill(row + size_t(y) * ow, row + size_t(y + 1) * ow, 0.f);
                        continue;
                    }
                    const float* src = x + (size_t(c) * H + sy) * W;
                    for (int xph = 0; xph < ow; ++xph) {
                        int sx = xph * stride - pad_left + kx;
                        row[size_t(y) * ow + xph] = (sx >= 0 && sx < W) ? src[sx] : 0.f;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add the patch matrix back onto the image.
void col2im(const float* col, int C, int H, int W, int kernel, int stride, int pad_top,
            int pad_left, int oh, int ow, float* x) {
    std::fill(x, x + size_t(C) * H * W, 0.f);
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const float* row = col + (size_t(c) * kernel * kernel + ky * kernel + kx) *
                                             (size_t(oh) * ow);
                for (int y = 0; y < oh; ++y) {
                    int sy = y * stride - pad_top + ky;
                    if (sy < 0 || sy >= H) continue;
                    float* dst = x + (size_t(c) * H + sy) * W;
                    for (int xph = 0; xph < ow; ++xph) {
                        int sx = xph * stride - pad_left + kx;
                        if (sx >= 0 && sx < W) dst[sx] += row[size_t(y) * ow + xph];
                    }
                }
            }
        }
    }
}

void init_gaussian(Tensor& t, RngStream& rng, float stddev) {
    for (size_t i = 0; i < t.numel(); ++i) t[i] = float(rng.normal(0.0, stddev));
}

}  // namespace

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
        throw Error("concat_channels: extent mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.n(), a.c() + b.c(), a.h(), a.w());
    const size_t plane_a = size_t(a.c()) * a.h() * a.w();
    const size_t plane_b = size_t(b.c()) * b.h() * b.w();
    for (int n = 0; n < a.n(); ++n) {
        std::copy(a.sample(n), a.sample(n) + plane_a, out.sample(n));
        std::copy(b.sample(n), b.sample(n) + plane_b, out.sample(n) + plane_a);
    }
    return out;
}

void split_channels(const Tensor& g, int c_a, Tensor& ga, Tensor& gb) {
    ga = Tensor(g.n(), c_a, g.h(), g.w());
    gb = Tensor(g.n(), g.c() - c_a, g.h(), g.w());
    const size_t plane_a = size_t(c_a) * g.h() * g.w();
    const size_t plane_b = size_t(g.c() - c_a) * g.h() * g.w();
    for (int n = 0; n < g.n(); ++n) {
        std::copy(g.sample(n), g.sample(n) + plane_a, ga.sample(n));
        std::copy(g.sample(n) + plane_a, g.sample(n) + plane_a + plane_b, gb.sample(n));
    }
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad_top, int pad_bottom,
               int pad_left, int pad_right)
    : weight(out_ch, in_ch, kernel, kernel),
      bias(1, out_ch, 1, 1),
      gweight(out_ch, in_ch, kernel, kernel),
      gbias(1, out_ch, 1, 1),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_top_(pad_top),
      pad_bottom_(pad_bottom),
      pad_left_(pad_left),
      pad_right_(pad_right) {}

void Conv2d::init(RngStream& rng, float stddev) {
    init_gaussian(weight, rng, stddev);
    bias.zero();
}

void Conv2d::zero_grad() {
    gweight.zero();
    gbias.zero();
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".weight", &weight, &gweight});
    params.push_back({prefix + ".bias", &bias, &gbias});
}

Tensor Conv2d::forward(const Tensor& x, const Context& ctx) {
    if (x.c() != in_ch_)
        throw Error("Conv2d: channel mismatch, got " + x.shape_str());
    const int oh = out_height(x.h()), ow = out_width(x.w());
    if (oh < 1 || ow < 1) throw Error("Conv2d: input too small: " + x.shape_str());
    Tensor y(x.n(), out_ch_, oh, ow);
    const int K = in_ch_ * kernel_ * kernel_;
    const int M = oh * ow;
    std::vector<float> col(size_t(K) * M);
    ConstMapRM w_mat(weight.data(), out_ch_, K);
    for (int n = 0; n < x.n(); ++n) {
        im2col(x.sample(n), in_ch_, x.h(), x.w(), kernel_, stride_, pad_top_, pad_left_, oh, ow,
               col.data());
        MapRM y_mat(y.sample(n), out_ch_, M);
        y_mat.noalias() = w_mat * ConstMapRM(col.data(), K, M);
        for (int c = 0; c < out_ch_; ++c) y_mat.row(c).array() += bias[c];
    }
    (void)ctx;
    x_cache_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const Tensor& x = x_cache_;
    if (!x.defined()) throw Error("Conv2d: backward before forward");
    const int oh = gy.h(), ow = gy.w();
    const int K = in_ch_ * kernel_ * kernel_;
    const int M = oh * ow;
    Tensor gx(x.n(), in_ch_, x.h(), x.w());
    std::vector<float> col(size_t(K) * M);
    std::vector<float> gcol(size_t(K) * M);
    ConstMapRM w_mat(weight.data(), out_ch_, K);
    MapRM gw_mat(gweight.data(), out_ch_, K);
    for (int n = 0; n < x.n(); ++n) {
        ConstMapRM gy_mat(gy.sample(n), out_ch_, M);
        // input gradient
        MapRM gcol_mat(gcol.data(), K, M);
        gcol_mat.noalias() = w_mat.transpose() * gy_mat;
        col2im(gcol.data(), in_ch_, x.h(), x.w(), kernel_, stride_, pad_top_, pad_left_, oh, ow,
               gx.sample(n));
        // weight gradient
        im2col(x.sample(n), in_ch_, x.h(), x.w(), kernel_, stride_, pad_top_, pad_left_, oh, ow,
               col.data());
        gw_mat.noalias() += gy_mat * ConstMapRM(col.data(), K, M).transpose();
        for (int c = 0; c < out_ch_; ++c) gbias[c] += gy_mat.row(c).sum();
    }
    return gx;
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad)
    : weight(in_ch, out_ch, kernel, kernel),
      bias(1, out_ch, 1, 1),
      gweight(in_ch, out_ch, kernel, kernel),
      gbias(1, out_ch, 1, 1),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {}

void ConvTranspose2d::init(RngStream& rng, float stddev) {
    init_gaussian(weight, rng, stddev);
    bias.zero();
}

void ConvTranspose2d::zero_grad() {
    gweight.zero();
    gbias.zero();
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".weight", &weight, &gweight});
    params.push_back({prefix + ".bias", &bias, &gbias});
}

Tensor ConvTranspose2d::forward(const Tensor& x, const Context& ctx) {
    if (x.c() != in_ch_) throw Error("ConvTranspose2d: channel mismatch " + x.shape_str());
    const int oh = out_height(x.h()), ow = out_width(x.w());
    if (oh < 1 || ow < 1) throw Error("ConvTranspose2d: input too small");
    Tensor y(x.n(), out_ch_, oh, ow);
    // The transposed convolution is the adjoint of a stride-s conv from the
    // output grid back to the input grid: cols = W^T x, then scatter.
    const int K = out_ch_ * kernel_ * kernel_;
    const int M = x.h() * x.w();
    std::vector<float> cols(size_t(K) * M);
    ConstMapRM w_mat(weight.data(), in_ch_, K);
    for (int n = 0; n < x.n(); ++n) {
        ConstMapRM x_mat(x.sample(n), in_ch_, M);
        MapRM col_mat(cols.data(), K, M);
        col_mat.noalias() = w_mat.transpose() * x_mat;
        col2im(cols.data(), out_ch_, oh, ow, kernel_, stride_, pad_, pad_, x.h(), x.w(),
               y.sample(n));
        float* ys = y.sample(n);
        for (int c = 0; c < out_ch_; ++c) {
            float b = bias[c];
            float* plane = ys + size_t(c) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) plane[i] += b;
        }
    }
    (void)ctx;
    x_cache_ = x;
    return y;
}

Tensor ConvTranspose2d::backward(const Tensor& gy) {
    const Tensor& x = x_cache_;
    if (!x.defined()) throw Error("ConvTranspose2d: backward before forward");
    const int K = out_ch_ * kernel_ * kernel_;
    const int M = x.h() * x.w();
    Tensor gx(x.n(), in_ch_, x.h(), x.w());
    std::vector<float> col(size_t(K) * M);
    ConstMapRM w_mat(weight.data(), in_ch_, K);
    MapRM gw_mat(gweight.data(), in_ch_, K);
    for (int n = 0; n < x.n(); ++n) {
        // gather patches of gy on the output grid; gx = W * col(gy)
        im2col(gy.sample(n), out_ch_, gy.h(), gy.w(), kernel_, stride_, pad_, pad_, x.h(), x.w(),
               col.data());
        ConstMapRM col_mat(col.data(), K, M);
        MapRM gx_mat(gx.sample(n), in_ch_, M);
        gx_mat.noalias() = w_mat * col_mat;
        ConstMapRM x_mat(x.sample(n), in_ch_, M);
        gw_mat.noalias() += x_mat * col_mat.transpose();
        const float* gys = gy.sample(n);
        for (int c = 0; c < out_ch_; ++c) {
            const float* plane = gys + size_t(c) * gy.h() * gy.w();
            double acc = 0;
            for (int i = 0; i < gy.h() * gy.w(); ++i) acc += plane[i];
            gbias[c] += float(acc);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps)
    : gamma(1, channels, 1, 1, 1.f),
      beta(1, channels, 1, 1, 0.f),
      ggamma(1, channels, 1, 1),
      gbeta(1, channels, 1, 1),
      running_mean(1, channels, 1, 1, 0.f),
      running_var(1, channels, 1, 1, 1.f),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {}

void BatchNorm2d::zero_grad() {
    ggamma.zero();
    gbeta.zero();
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".gamma", &gamma, &ggamma});
    params.push_back({prefix + ".beta", &beta, &gbeta});
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers) {
    buffers.push_back({prefix + ".running_mean", &running_mean});
    buffers.push_back({prefix + ".running_var", &running_var});
}

Tensor BatchNorm2d::forward(const Tensor& x, const Context& ctx) {
    if (x.c() != channels_) throw Error("BatchNorm2d: channel mismatch");
    Tensor y = Tensor::zeros_like(x);
    const int plane = x.h() * x.w();
    const size_t count = size_t(x.n()) * plane;
    trained_forward_ = ctx.training;
    if (ctx.training) {
        xhat_cache_ = Tensor::zeros_like(x);
        inv_std_cache_.assign(channels_, 0.f);
        for (int c = 0; c < channels_; ++c) {
            double mean = 0;
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.sample(n) + size_t(c) * plane;
                for (int i = 0; i < plane; ++i) mean += p[i];
            }
            mean /= double(count);
            double var = 0;
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.sample(n) + size_t(c) * plane;
                for (int i = 0; i < plane; ++i) {
                    double d = p[i] - mean;
                    var += d * d;
                }
            }
            var /= double(count);  // biased, used for normalization
            float inv = 1.f / std::sqrt(float(var) + eps_);
            inv_std_cache_[c] = inv;
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.sample(n) + size_t(c) * plane;
                float* xh = xhat_cache_.sample(n) + size_t(c) * plane;
                float* yp = y.sample(n) + size_t(c) * plane;
                for (int i = 0; i < plane; ++i) {
                    xh[i] = (p[i] - float(mean)) * inv;
                    yp[i] = xh[i] * gamma[c] + beta[c];
                }
            }
            double var_unbiased = count > 1 ? var * double(count) / double(count - 1) : var;
            running_mean[c] = (1 - momentum_) * running_mean[c] + momentum_ * float(mean);
            running_var[c] = (1 - momentum_) * running_var[c] + momentum_ * float(var_unbiased);
        }
    } else {
        for (int c = 0; c < channels_; ++c) {
            float inv = 1.f / std::sqrt(running_var[c] + eps_);
            float mean = running_mean[c];
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.sample(n) + size_t(c) * plane;
                float* yp = y.sample(n) + size_t(c) * plane;
                for (int i = 0; i < plane; ++i) yp[i] = (p[i] - mean) * inv * gamma[c] + beta[c];
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
    if (!trained_forward_)
        throw Error("BatchNorm2d: backward requires a training-mode forward");
    const Tensor& xhat = xhat_cache_;
    Tensor gx = Tensor::zeros_like(gy);
    const int plane = gy.h() * gy.w();
    const double m = double(gy.n()) * plane;
    for (int c = 0; c < channels_; ++c) {
        double sum_gy = 0, sum_gy_xhat = 0;
        for (int n = 0; n < gy.n(); ++n) {
            const float* g = gy.sample(n) + size_t(c) * plane;
            const float* xh = xhat.sample(n) + size_t(c) * plane;
            for (int i = 0; i < plane; ++i) {
                sum_gy += g[i];
                sum_gy_xhat += double(g[i]) * xh[i];
            }
        }
        ggamma[c] += float(sum_gy_xhat);
        gbeta[c] += float(sum_gy);
        const float inv = inv_std_cache_[c];
        const float g_over_m = gamma[c] * inv / float(m);
        for (int n = 0; n < gy.n(); ++n) {
            const float* g = gy.sample(n) + size_t(c) * plane;
            const float* xh = xhat.sample(n) + size_t(c) * plane;
            float* gxp = gx.sample(n) + size_t(c) * plane;
            for (int i = 0; i < plane; ++i)
                gxp[i] = g_over_m *
                         (float(m) * g[i] - float(sum_gy) - xh[i] * float(sum_gy_xhat));
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Activations

PReLU::PReLU(int channels, float initial_slope)
    : slope(1, channels, 1, 1, initial_slope), gslope(1, channels, 1, 1) {}

void PReLU::zero_grad() { gslope.zero(); }

void PReLU::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".slope", &slope, &gslope});
}

Tensor PReLU::forward(const Tensor& x, const Context&) {
    if (x.c() != slope.c()) throw Error("PReLU: channel mismatch");
    x_cache_ = x;
    return prelu(x, slope);
}

Tensor PReLU::backward(const Tensor& gy) {
    const Tensor& x = x_cache_;
    Tensor gx = Tensor::zeros_like(gy);
    const int plane = gy.h() * gy.w();
    for (int c = 0; c < gy.c(); ++c) {
        const float a = slope[c];
        double ga = 0;
        for (int n = 0; n < gy.n(); ++n) {
            const float* xp = x.sample(n) + size_t(c) * plane;
            const float* g = gy.sample(n) + size_t(c) * plane;
            float* gxp = gx.sample(n) + size_t(c) * plane;
            for (int i = 0; i < plane; ++i) {
                if (xp[i] > 0) {
                    gxp[i] = g[i];
                } else {
                    gxp[i] = g[i] * a;
                    ga += double(g[i]) * xp[i];
                }
            }
        }
        gslope[c] += float(ga);
    }
    return gx;
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
    if (x.c() != slope.c()) throw Error("prelu: slope channel count mismatch");
    Tensor y = Tensor::zeros_like(x);
    const int plane = x.h() * x.w();
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
            const float a = slope[c];
            const float* xp = x.sample(n) + size_t(c) * plane;
            float* yp = y.sample(n) + size_t(c) * plane;
            for (int i = 0; i < plane; ++i) yp[i] = xp[i] > 0 ? xp[i] : a * xp[i];
        }
    return y;
}

Tensor ReLU::forward(const Tensor& x, const Context&) {
    x_cache_ = x;
    Tensor y = x;
    for (size_t i = 0; i < y.numel(); ++i)
        if (y[i] < 0) y[i] = 0;
    return y;
}

Tensor ReLU::backward(const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.numel(); ++i)
        if (x_cache_[i] <= 0) gx[i] = 0;
    return gx;
}

Tensor LeakyReLU::forward(const Tensor& x, const Context&) {
    x_cache_ = x;
    Tensor y = x;
    for (size_t i = 0; i < y.numel(); ++i)
        if (y[i] < 0) y[i] *= slope_;
    return y;
}

Tensor LeakyReLU::backward(const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.numel(); ++i)
        if (x_cache_[i] <= 0) gx[i] *= slope_;
    return gx;
}

Tensor Tanh::forward(const Tensor& x, const Context&) {
    Tensor y = x;
    for (size_t i = 0; i < y.numel(); ++i) y[i] = std::tanh(y[i]);
    y_cache_ = y;
    return y;
}

Tensor Tanh::backward(const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.numel(); ++i) gx[i] *= 1.f - y_cache_[i] * y_cache_[i];
    return gx;
}

Tensor Dropout::forward(const Tensor& x, const Context& ctx) {
    active_ = ctx.training && drop_prob_ > 0.f;
    if (!active_) return x;
    if (!ctx.rng) throw Error("Dropout: training forward needs an RNG stream");
    const float keep = 1.f - drop_prob_;
    mask_cache_ = Tensor::zeros_like(x);
    Tensor y = Tensor::zeros_like(x);
    for (size_t i = 0; i < x.numel(); ++i) {
        float m = ctx.rng->uniform() < keep ? 1.f / keep : 0.f;
        mask_cache_[i] = m;
        y[i] = x[i] * m;
    }
    return y;
}

Tensor Dropout::backward(const Tensor& gy) {
    if (!active_) return gy;
    Tensor gx = gy;
    for (size_t i = 0; i < gx.numel(); ++i) gx[i] *= mask_cache_[i];
    return gx;
}

}  // namespace nn
}  // namespace seqforge
