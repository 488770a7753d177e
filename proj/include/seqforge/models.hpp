#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seqforge/layers.hpp"

namespace seqforge {
namespace nn {

// Architecture description shared by both cascade stages. The defaults adapt
// the pix2pix recipe to 128x64 inputs: 6 stride-2 4x4 encoder convolutions
// with a residual block after every level except the last, mirrored
// transposed-convolution decoder with concat skips and dropout on the first
// three levels, and a 4-layer patch discriminator.
struct CascadePlan {
    int image_height = 64;
    int image_width = 128;
    int image_channels = 3;
    std::vector<int> encoder_channels = {64, 128, 256, 512, 512, 512};
    std::vector<bool> residual_after;   // default: true for all levels but the last
    std::vector<int> decoder_channels;  // default: mirrored encoder widths
    int dropout_decoder_levels = 3;
    float dropout_prob = 0.5f;
    float prelu_init = 0.25f;
    std::vector<int> disc_channels = {64, 128, 256, 1};
    std::vector<int> disc_strides = {2, 2, 2, 1};
    float leaky_slope = 0.2f;
    float init_stddev = 0.02f;
    float bn_momentum = 0.1f;
    float bn_eps = 1e-5f;

    int levels() const { return int(encoder_channels.size()); }
    std::vector<bool> effective_residual_flags() const;
    std::vector<int> effective_decoder_channels() const;
    void validate() const;

    nlohmann::json to_json() const;
    static CascadePlan from_json(const nlohmann::json& j);

    bool operator==(const CascadePlan&) const = default;
};

// H(x) = F(x) + x with F = two 3x3 stride-1 convolutions with normalization
// and a PReLU between them; requires equal input/output channels.
class ResidualBlock {
public:
    ResidualBlock(int channels, const CascadePlan& plan);

    Tensor forward(const Tensor& x, const Context& ctx);
    Tensor backward(const Tensor& gy);

    void init(RngStream& rng, float stddev);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    Conv2d conv1, conv2;
    BatchNorm2d bn1, bn2;
    PReLU act;
};

// Encoder-decoder generator with skip connections; shape preserving, tanh
// output in [-1,1]. Decoder dropout (active in training mode) realizes the
// stochastic input.
class Generator {
public:
    Generator(const CascadePlan& plan, int in_channels);

    Tensor forward(const Tensor& x, const Context& ctx);
    // Backward through the cached forward; accumulates parameter gradients
    // and returns the gradient with respect to the input.
    Tensor backward(const Tensor& gy);

    void init(RngStream& rng);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    const CascadePlan& plan() const { return plan_; }
    int in_channels() const { return in_channels_; }

private:
    struct EncStage {
        Conv2d conv;
        std::optional<BatchNorm2d> bn;
        PReLU act;
        std::optional<ResidualBlock> res;
    };
    struct DecStage {
        ConvTranspose2d deconv;
        std::optional<BatchNorm2d> bn;
        std::optional<Dropout> drop;
        ReLU relu;
    };

    CascadePlan plan_;
    int in_channels_;
    std::vector<EncStage> enc_;
    std::vector<DecStage> dec_;
    Tanh tanh_;
    std::vector<Tensor> skip_grad_;  // accumulated grads for encoder outputs
    std::vector<int> dec_skip_channels_;
};

// Conditional patch discriminator over channel-concatenated (x, y) pairs;
// emits a grid of raw per-patch logits.
class PatchDiscriminator {
public:
    PatchDiscriminator(const CascadePlan& plan, int pair_channels);

    Tensor forward(const Tensor& x, const Tensor& y, const Context& ctx);
    // Returns (grad_x, grad_y).
    std::pair<Tensor, Tensor> backward(const Tensor& glogits);

    void init(RngStream& rng);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    // Patch-grid extent implied by the stride plan.
    std::pair<int, int> logit_extent(int in_h, int in_w) const;

private:
    struct Layer {
        Conv2d conv;
        std::optional<BatchNorm2d> bn;
        std::optional<LeakyReLU> act;
    };
    CascadePlan plan_;
    int cond_channels_ = 0;
    std::vector<Layer> layers_;
};

// Both generator/discriminator pairs. G1 maps the semantic image; G2 maps
// concat(x, y1) and completes the background. The stages share one plan.
struct CascadeState {
    CascadePlan plan;
    Generator g1, g2;
    PatchDiscriminator d1, d2;
    int64_t step = 0;

    explicit CascadeState(const CascadePlan& p);
    void init(uint64_t seed);

    void collect(std::vector<ParamRef>& params);
    void collect_buffers(std::vector<BufferRef>& buffers);
};

struct CascadeOutput {
    Tensor y1, y2;
};

// y1 = G1(x), y2 = G2(concat(x, y1)); y1 enters stage 2 detached, so
// stage-2 losses never reach G1 parameters.
CascadeOutput cascade_forward(CascadeState& state, const Tensor& x, const Context& ctx);

}  // namespace nn
}  // namespace seqforge
