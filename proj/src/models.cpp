#include "seqforge/models.hpp"

#include <nlohmann/json.hpp>

namespace seqforge {
namespace nn {

// ---------------------------------------------------------------------------
// CascadePlan

std::vector<bool> CascadePlan::effective_residual_flags() const {
    if (!residual_after.empty()) return residual_after;
    std::vector<bool> flags(encoder_channels.size(), true);
    flags.back() = false;
    return flags;
}

std::vector<int> CascadePlan::effective_decoder_channels() const {
    if (!decoder_channels.empty()) return decoder_channels;
    // Mirror: decoder stage j produces encoder_channels[L-j] maps, j=1..L-1.
    const int L = levels();
    std::vector<int> ch(L - 1);
    for (int j = 1; j < L; ++j) ch[j - 1] = encoder_channels[L - j];
    return ch;
}

void CascadePlan::validate() const {
    const int L = levels();
    if (L < 2) throw ConfigError("plan: need at least 2 encoder levels");
    if (image_channels != 3 && image_channels != 1)
        throw ConfigError("plan: image_channels must be 1 or 3");
    for (int c : encoder_channels)
        if (c < 1) throw ConfigError("plan: encoder channel widths must be positive");
    if ((image_height >> L) < 1 || (image_width >> L) < 1 ||
        (image_height % (1 << L)) != 0 || (image_width % (1 << L)) != 0)
        throw ConfigError("plan: image extents must be divisible by 2^levels");
    auto flags = effective_residual_flags();
    if (int(flags.size()) != L)
        throw ConfigError("plan: residual flag count must match encoder levels");
    if (flags.back())
        throw ConfigError("plan: no residual block after the last encoder level");
    if (int(effective_decoder_channels().size()) != L - 1)
        throw ConfigError("plan: decoder channel count must be levels-1");
    if (dropout_decoder_levels < 0 || dropout_decoder_levels > L)
        throw ConfigError("plan: dropout level count out of range");
    if (disc_channels.size() != disc_strides.size() || disc_channels.empty())
        throw ConfigError("plan: discriminator channels/strides mismatch");
    if (disc_channels.back() != 1)
        throw ConfigError("plan: discriminator must end in one logit channel");
    for (int s : disc_strides)
        if (s != 1 && s != 2) throw ConfigError("plan: discriminator strides must be 1 or 2");
}

nlohmann::json CascadePlan::to_json() const {
    nlohmann::json j;
    j["image_height"] = image_height;
    j["image_width"] = image_width;
    j["image_channels"] = image_channels;
    j["encoder_channels"] = encoder_channels;
    j["residual_after"] = effective_residual_flags();
    j["decoder_channels"] = effective_decoder_channels();
    j["dropout_decoder_levels"] = dropout_decoder_levels;
    j["dropout_prob"] = dropout_prob;
    j["prelu_init"] = prelu_init;
    j["disc_channels"] = disc_channels;
    j["disc_strides"] = disc_strides;
    j["leaky_slope"] = leaky_slope;
    j["init_stddev"] = init_stddev;
    j["bn_momentum"] = bn_momentum;
    j["bn_eps"] = bn_eps;
    return j;
}

CascadePlan CascadePlan::from_json(const nlohmann::json& j) {
    CascadePlan p;
    p.image_height = j.at("image_height").get<int>();
    p.image_width = j.at("image_width").get<int>();
    p.image_channels = j.at("image_channels").get<int>();
    p.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
    p.residual_after = j.at("residual_after").get<std::vector<bool>>();
    p.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
    p.dropout_decoder_levels = j.at("dropout_decoder_levels").get<int>();
    p.dropout_prob = j.at("dropout_prob").get<float>();
    p.prelu_init = j.at("prelu_init").get<float>();
    p.disc_channels = j.at("disc_channels").get<std::vector<int>>();
    p.disc_strides = j.at("disc_strides").get<std::vector<int>>();
    p.leaky_slope = j.at("leaky_slope").get<float>();
    p.init_stddev = j.at("init_stddev").get<float>();
    p.bn_momentum = j.at("bn_momentum").get<float>();
    p.bn_eps = j.at("bn_eps").get<float>();
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(int channels, const CascadePlan& plan)
    : conv1(channels, channels, 3, 1, 1),
      conv2(channels, channels, 3, 1, 1),
      bn1(channels, plan.bn_momentum, plan.bn_eps),
      bn2(channels, plan.bn_momentum, plan.bn_eps),
      act(channels, plan.prelu_init) {}

Tensor ResidualBlock::forward(const Tensor& x, const Context& ctx) {
    Tensor f = bn2.forward(conv2.forward(act.forward(bn1.forward(conv1.forward(x, ctx), ctx), ctx),
                                         ctx),
                           ctx);
    if (!f.same_shape(x)) throw Error("ResidualBlock: channel mismatch for identity shortcut");
    Tensor y = x;
    for (size_t i = 0; i < y.numel(); ++i) y[i] += f[i];
    return y;
}

Tensor ResidualBlock::backward(const Tensor& gy) {
    Tensor g = conv1.backward(bn1.backward(act.backward(conv2.backward(bn2.backward(gy)))));
    for (size_t i = 0; i < g.numel(); ++i) g[i] += gy[i];  // identity shortcut
    return g;
}

void ResidualBlock::init(RngStream& rng, float stddev) {
    conv1.init(rng, stddev);
    conv2.init(rng, stddev);
}

void ResidualBlock::zero_grad() {
    conv1.zero_grad();
    conv2.zero_grad();
    bn1.zero_grad();
    bn2.zero_grad();
    act.zero_grad();
}

void ResidualBlock::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    conv1.collect(prefix + ".conv1", params);
    bn1.collect(prefix + ".bn1", params);
    act.collect(prefix + ".act", params);
    conv2.collect(prefix + ".conv2", params);
    bn2.collect(prefix + ".bn2", params);
}

void ResidualBlock::collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers) {
    bn1.collect_buffers(prefix + ".bn1", buffers);
    bn2.collect_buffers(prefix + ".bn2", buffers);
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const CascadePlan& plan, int in_channels)
    : plan_(plan), in_channels_(in_channels) {
    plan_.validate();
    const int L = plan_.levels();
    const auto& ch = plan_.encoder_channels;
    const auto res_flags = plan_.effective_residual_flags();

    int in_c = in_channels_;
    for (int i = 0; i < L; ++i) {
        EncStage stage;
        stage.conv = Conv2d(in_c, ch[i], 4, 2, 1);
        if (i > 0) stage.bn.emplace(ch[i], plan_.bn_momentum, plan_.bn_eps);
        stage.act = PReLU(ch[i], plan_.prelu_init);
        if (res_flags[i]) stage.res.emplace(ch[i], plan_);
        enc_.push_back(std::move(stage));
        in_c = ch[i];
    }

    const auto dec_ch = plan_.effective_decoder_channels();
    dec_skip_channels_.assign(L, 0);
    int prev_out = ch[L - 1];
    for (int j = 1; j <= L; ++j) {
        DecStage stage;
        int in_dec = (j == 1) ? ch[L - 1] : prev_out + ch[L - j];
        if (j > 1) dec_skip_channels_[j - 1] = ch[L - j];
        int out_dec = (j == L) ? plan_.image_channels : dec_ch[j - 1];
        stage.deconv = ConvTranspose2d(in_dec, out_dec, 4, 2, 1);
        if (j < L) {
            stage.bn.emplace(out_dec, plan_.bn_momentum, plan_.bn_eps);
            if (j <= plan_.dropout_decoder_levels) stage.drop.emplace(plan_.dropout_prob);
        }
        dec_.push_back(std::move(stage));
        prev_out = out_dec;
    }
}

void Generator::init(RngStream& rng) {
    for (auto& s : enc_) {
        s.conv.init(rng, plan_.init_stddev);
        if (s.res) s.res->init(rng, plan_.init_stddev);
    }
    for (auto& s : dec_) s.deconv.init(rng, plan_.init_stddev);
}

void Generator::zero_grad() {
    for (auto& s : enc_) {
        s.conv.zero_grad();
        if (s.bn) s.bn->zero_grad();
        s.act.zero_grad();
        if (s.res) s.res->zero_grad();
    }
    for (auto& s : dec_) {
        s.deconv.zero_grad();
        if (s.bn) s.bn->zero_grad();
    }
}

void Generator::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    for (size_t i = 0; i < enc_.size(); ++i) {
        std::string p = prefix + ".enc" + std::to_string(i + 1);
        enc_[i].conv.collect(p + ".conv", params);
        if (enc_[i].bn) enc_[i].bn->collect(p + ".bn", params);
        enc_[i].act.collect(p + ".act", params);
        if (enc_[i].res) enc_[i].res->collect(p + ".res", params);
    }
    for (size_t j = 0; j < dec_.size(); ++j) {
        std::string p = prefix + ".dec" + std::to_string(j + 1);
        dec_[j].deconv.collect(p + ".deconv", params);
        if (dec_[j].bn) dec_[j].bn->collect(p + ".bn", params);
    }
}

void Generator::collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers) {
    for (size_t i = 0; i < enc_.size(); ++i) {
        std::string p = prefix + ".enc" + std::to_string(i + 1);
        if (enc_[i].bn) enc_[i].bn->collect_buffers(p + ".bn", buffers);
        if (enc_[i].res) enc_[i].res->collect_buffers(p + ".res", buffers);
    }
    for (size_t j = 0; j < dec_.size(); ++j) {
        std::string p = prefix + ".dec" + std::to_string(j + 1);
        if (dec_[j].bn) dec_[j].bn->collect_buffers(p + ".bn", buffers);
    }
}

Tensor Generator::forward(const Tensor& x, const Context& ctx) {
    if (x.c() != in_channels_ || x.h() != plan_.image_height || x.w() != plan_.image_width)
        throw Error("Generator: expected " + std::to_string(in_channels_) + "x" +
                    std::to_string(plan_.image_height) + "x" + std::to_string(plan_.image_width) +
                    " input, got " + x.shape_str());
    const int L = plan_.levels();
    std::vector<Tensor> enc_out(L);
    Tensor cur = x;
    for (int i = 0; i < L; ++i) {
        cur = enc_[i].conv.forward(cur, ctx);
        if (enc_[i].bn) cur = enc_[i].bn->forward(cur, ctx);
        cur = enc_[i].act.forward(cur, ctx);
        if (enc_[i].res) cur = enc_[i].res->forward(cur, ctx);
        enc_out[i] = cur;
    }
    skip_grad_.assign(L, Tensor());

    for (int j = 1; j <= L; ++j) {
        if (j > 1) cur = concat_channels(cur, enc_out[L - j]);
        cur = dec_[j - 1].deconv.forward(cur, ctx);
        if (j < L) {
            cur = dec_[j - 1].bn->forward(cur, ctx);
            if (dec_[j - 1].drop) cur = dec_[j - 1].drop->forward(cur, ctx);
            cur = dec_[j - 1].relu.forward(cur, ctx);
        } else {
            cur = tanh_.forward(cur, ctx);
        }
    }
    return cur;
}

Tensor Generator::backward(const Tensor& gy) {
    const int L = plan_.levels();
    Tensor g = gy;
    for (int j = L; j >= 1; --j) {
        if (j < L) {
            g = dec_[j - 1].relu.backward(g);
            if (dec_[j - 1].drop) g = dec_[j - 1].drop->backward(g);
            g = dec_[j - 1].bn->backward(g);
        } else {
            g = tanh_.backward(g);
        }
        g = dec_[j - 1].deconv.backward(g);
        if (j > 1) {
            Tensor g_prev, g_skip;
            split_channels(g, g.c() - dec_skip_channels_[j - 1], g_prev, g_skip);
            skip_grad_[L - j] = std::move(g_skip);
            g = std::move(g_prev);
        }
    }
    // g now holds the gradient w.r.t. e[L]; walk the encoder down.
    for (int i = L - 1; i >= 0; --i) {
        if (skip_grad_[i].defined()) {
            for (size_t k = 0; k < g.numel(); ++k) g[k] += skip_grad_[i][k];
        }
        if (enc_[i].res) g = enc_[i].res->backward(g);
        g = enc_[i].act.backward(g);
        if (enc_[i].bn) g = enc_[i].bn->backward(g);
        g = enc_[i].conv.backward(g);
    }
    return g;
}

// ---------------------------------------------------------------------------
// PatchDiscriminator

PatchDiscriminator::PatchDiscriminator(const CascadePlan& plan, int pair_channels)
    : plan_(plan), cond_channels_(pair_channels / 2) {
    plan_.validate();
    const auto& ch = plan_.disc_channels;
    const auto& st = plan_.disc_strides;
    int in_c = pair_channels;
    for (size_t i = 0; i < ch.size(); ++i) {
        Layer layer;
        if (st[i] == 2) {
            layer.conv = Conv2d(in_c, ch[i], 4, 2, 1);
        } else {
            // stride-1 'same' for the 4x4 kernel: total padding 3 split 1/2.
            layer.conv = Conv2d(in_c, ch[i], 4, 1, 1, 2, 1, 2);
        }
        bool last = i + 1 == ch.size();
        if (!last) {
            if (i > 0) layer.bn.emplace(ch[i], plan_.bn_momentum, plan_.bn_eps);
            layer.act.emplace(plan_.leaky_slope);
        }
        layers_.push_back(std::move(layer));
        in_c = ch[i];
    }
}

void PatchDiscriminator::init(RngStream& rng) {
    for (auto& l : layers_) l.conv.init(rng, plan_.init_stddev);
}

void PatchDiscriminator::zero_grad() {
    for (auto& l : layers_) {
        l.conv.zero_grad();
        if (l.bn) l.bn->zero_grad();
    }
}

void PatchDiscriminator::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        std::string p = prefix + ".conv" + std::to_string(i + 1);
        layers_[i].conv.collect(p, params);
        if (layers_[i].bn) layers_[i].bn->collect(p + ".bn", params);
    }
}

void PatchDiscriminator::collect_buffers(const std::string& prefix,
                                         std::vector<BufferRef>& buffers) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        std::string p = prefix + ".conv" + std::to_string(i + 1);
        if (layers_[i].bn) layers_[i].bn->collect_buffers(p + ".bn", buffers);
    }
}

std::pair<int, int> PatchDiscriminator::logit_extent(int in_h, int in_w) const {
    int h = in_h, w = in_w;
    for (int s : plan_.disc_strides) {
        if (s == 2) {
            h /= 2;
            w /= 2;
        }
    }
    return {h, w};
}

Tensor PatchDiscriminator::forward(const Tensor& x, const Tensor& y, const Context& ctx) {
    if (!x.same_shape(y)) throw Error("PatchDiscriminator: condition/candidate extent mismatch");
    Tensor cur = concat_channels(x, y);
    for (auto& l : layers_) {
        cur = l.conv.forward(cur, ctx);
        if (l.bn) cur = l.bn->forward(cur, ctx);
        if (l.act) cur = l.act->forward(cur, ctx);
    }
    return cur;
}

std::pair<Tensor, Tensor> PatchDiscriminator::backward(const Tensor& glogits) {
    Tensor g = glogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        if (it->act) g = it->act->backward(g);
        if (it->bn) g = it->bn->backward(g);
        g = it->conv.backward(g);
    }
    Tensor gx, gy;
    split_channels(g, cond_channels_, gx, gy);
    return {std::move(gx), std::move(gy)};
}

// ---------------------------------------------------------------------------
// CascadeState

CascadeState::CascadeState(const CascadePlan& p)
    : plan(p),
      g1(p, p.image_channels),
      g2(p, 2 * p.image_channels),
      d1(p, 2 * p.image_channels),
      d2(p, 2 * p.image_channels) {}

void CascadeState::init(uint64_t seed) {
    RngStream root(seed);
    RngStream r1 = root.fork(1), r2 = root.fork(2), r3 = root.fork(3), r4 = root.fork(4);
    g1.init(r1);
    d1.init(r2);
    g2.init(r3);
    d2.init(r4);
    step = 0;
}

void CascadeState::collect(std::vector<ParamRef>& params) {
    g1.collect("g1", params);
    d1.collect("d1", params);
    g2.collect("g2", params);
    d2.collect("d2", params);
}

void CascadeState::collect_buffers(std::vector<BufferRef>& buffers) {
    g1.collect_buffers("g1", buffers);
    d1.collect_buffers("d1", buffers);
    g2.collect_buffers("g2", buffers);
    d2.collect_buffers("d2", buffers);
}

CascadeOutput cascade_forward(CascadeState& state, const Tensor& x, const Context& ctx) {
    CascadeOutput out;
    out.y1 = state.g1.forward(x, ctx);
    // y1 enters stage 2 as data: stage-2 backward stops at this boundary.
    out.y2 = state.g2.forward(concat_channels(x, out.y1), ctx);
    return out;
}

}  // namespace nn
}  // namespace seqforge
