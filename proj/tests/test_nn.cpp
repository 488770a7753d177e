#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "seqforge/checkpoint.hpp"
#include "seqforge/losses.hpp"
#include "seqforge/models.hpp"
#include "testutil.hpp"

using namespace seqforge;
using namespace seqforge::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, RngStream& rng, double scale = 1.0) {
    Tensor t(n, c, h, w);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = float(rng.normal(0.0, scale));
    return t;
}

// Weighted-sum readout: turns any tensor-valued op into a scalar loss with a
// known adjoint (the weights themselves), accumulated in double.
struct Readout {
    Tensor weights;
    explicit Readout(const Tensor& like, RngStream& rng) : weights(Tensor::zeros_like(like)) {
        for (size_t i = 0; i < weights.numel(); ++i) weights[i] = float(rng.normal(0.0, 1.0));
    }
    double loss(const Tensor& y) const {
        double acc = 0;
        for (size_t i = 0; i < y.numel(); ++i) acc += double(weights[i]) * y[i];
        return acc;
    }
};

// Central finite differences against the analytic gradient; the error metric
// is ||ga - gf|| / (||ga|| + ||gf||).
double fd_relative_error(Tensor& target, const Tensor& analytic,
                         const std::function<double()>& loss) {
    const float h = 0.0078125f;  // 2^-7, exactly representable
    double nd = 0, na = 0, nf = 0;
    for (size_t i = 0; i < target.numel(); ++i) {
        float orig = target[i];
        float hi = orig + h, lo = orig - h;
        target[i] = hi;
        double lp = loss();
        target[i] = lo;
        double lm = loss();
        target[i] = orig;
        double fd = (lp - lm) / (double(hi) - double(lo));
        double a = analytic[i];
        nd += (a - fd) * (a - fd);
        na += a * a;
        nf += fd * fd;
    }
    return std::sqrt(nd) / (std::sqrt(na) + std::sqrt(nf) + 1e-12);
}

constexpr double kGradTol = 1e-4;

}  // namespace

// ---------------------------------------------------------------------------
// PReLU operation

TEST_CASE("prelu closed forms") {
    Tensor x(1, 1, 1, 2);
    x(0, 0, 0, 0) = -1.f;
    x(0, 0, 0, 1) = 2.f;
    Tensor a(1, 1, 1, 1, 0.25f);
    Tensor y = prelu(x, a);
    CHECK(y(0, 0, 0, 0) == doctest::Approx(-0.25).epsilon(1e-9));
    CHECK(y(0, 0, 0, 1) == 2.f);  // positive branch is the identity

    Tensor ones(1, 1, 1, 1, 1.f);
    Tensor y1 = prelu(x, ones);
    CHECK(y1(0, 0, 0, 0) == x(0, 0, 0, 0));  // a=1 reduces to identity
    Tensor zero(1, 1, 1, 1, 0.f);
    Tensor y0 = prelu(x, zero);
    CHECK(y0(0, 0, 0, 0) == 0.f);  // a=0 zeroes negatives
}

TEST_CASE("prelu slope gradient matches finite differences at x=-1") {
    PReLU act(1, 0.25f);
    Tensor x(1, 1, 1, 1, -1.f);
    Context ctx;
    act.zero_grad();
    Tensor y = act.forward(x, ctx);
    Tensor gy(1, 1, 1, 1, 1.f);
    act.backward(gy);
    CHECK(act.gslope[0] == doctest::Approx(-1.0).epsilon(1e-9));

    auto loss = [&] {
        Tensor out = act.forward(x, ctx);
        return double(out[0]);
    };
    double err = fd_relative_error(act.slope, act.gslope, loss);
    CHECK(err <= 1e-6);
}

// ---------------------------------------------------------------------------
// Residual block

TEST_CASE("residual block with a zeroed branch is the bit-exact identity") {
    CascadePlan plan;
    ResidualBlock block(3, plan);  // convs start at zero weight/bias
    RngStream rng(4);
    Tensor x = random_tensor(2, 3, 4, 4, rng);
    Context ctx{true, nullptr};
    Tensor y = block.forward(x, ctx);
    CHECK(std::memcmp(x.data(), y.data(), x.numel() * sizeof(float)) == 0);

    Context eval;
    Tensor ye = block.forward(x, eval);
    CHECK(std::memcmp(x.data(), ye.data(), x.numel() * sizeof(float)) == 0);
}

namespace {

// Independent re-implementation of the residual branch: two 3x3 stride-1
// convolutions with batch statistics normalization and a PReLU between.
void naive_conv3x3(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    y = Tensor(x.n(), w.n(), x.h(), x.w());
    for (int n = 0; n < x.n(); ++n)
        for (int co = 0; co < w.n(); ++co)
            for (int yy = 0; yy < x.h(); ++yy)
                for (int xx = 0; xx < x.w(); ++xx) {
                    double acc = b[co];
                    for (int ci = 0; ci < x.c(); ++ci)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                int sy = yy + ky - 1, sx = xx + kx - 1;
                                if (sy < 0 || sx < 0 || sy >= x.h() || sx >= x.w()) continue;
                                acc += double(x(n, ci, sy, sx)) * w(co, ci, ky, kx);
                            }
                    y(n, co, yy, xx) = float(acc);
                }
}

void naive_batchnorm_train(Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    const int plane = x.h() * x.w();
    const double count = double(x.n()) * plane;
    for (int c = 0; c < x.c(); ++c) {
        double mean = 0;
        for (int n = 0; n < x.n(); ++n)
            for (int i = 0; i < plane; ++i) mean += x.sample(n)[size_t(c) * plane + i];
        mean /= count;
        double var = 0;
        for (int n = 0; n < x.n(); ++n)
            for (int i = 0; i < plane; ++i) {
                double d = x.sample(n)[size_t(c) * plane + i] - mean;
                var += d * d;
            }
        var /= count;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int n = 0; n < x.n(); ++n)
            for (int i = 0; i < plane; ++i) {
                float& v = x.sample(n)[size_t(c) * plane + i];
                v = float(((double(v) - mean) * inv) * gamma[c] + beta[c]);
            }
    }
}

}  // namespace

TEST_CASE("residual branch equals an independently computed two-layer conv") {
    CascadePlan plan;
    ResidualBlock block(2, plan);
    RngStream rng(17);
    block.init(rng, 0.3f);
    // give the normalizations non-trivial parameters
    for (int c = 0; c < 2; ++c) {
        block.bn1.gamma[c] = float(rng.uniform(0.5, 1.5));
        block.bn1.beta[c] = float(rng.uniform(-0.3, 0.3));
        block.bn2.gamma[c] = float(rng.uniform(0.5, 1.5));
        block.bn2.beta[c] = float(rng.uniform(-0.3, 0.3));
        block.act.slope[c] = float(rng.uniform(0.1, 0.5));
    }
    Tensor x = random_tensor(2, 2, 4, 4, rng);
    Context ctx{true, nullptr};
    Tensor y = block.forward(x, ctx);

    Tensor f1;
    naive_conv3x3(x, block.conv1.weight, block.conv1.bias, f1);
    naive_batchnorm_train(f1, block.bn1.gamma, block.bn1.beta, 1e-5f);
    Tensor f1a = prelu(f1, block.act.slope);
    Tensor f2;
    naive_conv3x3(f1a, block.conv2.weight, block.conv2.bias, f2);
    naive_batchnorm_train(f2, block.bn2.gamma, block.bn2.beta, 1e-5f);

    for (size_t i = 0; i < y.numel(); ++i)
        CHECK(double(y[i]) - double(x[i]) == doctest::Approx(double(f2[i])).epsilon(1e-6));
}

// ---------------------------------------------------------------------------
// Generator / discriminator contracts

namespace {

CascadePlan tiny_plan() {
    CascadePlan plan;
    plan.encoder_channels = {4, 4, 8, 8, 8, 8};
    return plan;
}

}  // namespace

TEST_CASE("generator preserves extents and bounds its output") {
    CascadePlan plan = tiny_plan();
    Generator g(plan, 3);
    RngStream rng(8);
    g.init(rng);
    RngStream data_rng(9);
    Tensor x = random_tensor(2, 3, 64, 128, data_rng, 0.5);
    Context eval;
    Tensor y = g.forward(x, eval);
    CHECK(y.n() == 2);
    CHECK(y.c() == 3);
    CHECK(y.h() == 64);
    CHECK(y.w() == 128);
    for (size_t i = 0; i < y.numel(); ++i) {
        CHECK(y[i] >= -1.f);
        CHECK(y[i] <= 1.f);
    }

    Tensor y2 = g.forward(x, eval);
    CHECK(std::memcmp(y.data(), y2.data(), y.numel() * sizeof(float)) == 0);

    Tensor bad = random_tensor(1, 3, 32, 64, data_rng);
    CHECK_THROWS_AS(g.forward(bad, eval), Error);
}

TEST_CASE("discriminator logit grid follows the stride plan") {
    CascadePlan plan;  // default: strides 2,2,2,1 over 64x128
    PatchDiscriminator d(plan, 6);
    RngStream rng(12);
    d.init(rng);
    RngStream data_rng(13);
    Tensor x = random_tensor(1, 3, 64, 128, data_rng, 0.5);
    Tensor y = random_tensor(1, 3, 64, 128, data_rng, 0.5);
    Context eval;
    Tensor logits = d.forward(x, y, eval);
    CHECK(logits.n() == 1);
    CHECK(logits.c() == 1);
    CHECK(logits.h() == 8);
    CHECK(logits.w() == 16);
    auto [eh, ew] = d.logit_extent(64, 128);
    CHECK(eh == 8);
    CHECK(ew == 16);
}

TEST_CASE("zero-weight discriminator emits zero logits") {
    CascadePlan plan = tiny_plan();
    plan.disc_channels = {4, 8, 1};
    plan.disc_strides = {2, 2, 1};
    PatchDiscriminator d(plan, 6);  // weights default to zero
    RngStream rng(14);
    Tensor x = random_tensor(1, 3, 64, 128, rng);
    Tensor y = random_tensor(1, 3, 64, 128, rng);
    Context eval;
    Tensor logits = d.forward(x, y, eval);
    for (size_t i = 0; i < logits.numel(); ++i) CHECK(logits[i] == 0.f);
}

TEST_CASE("permuting the batch permutes discriminator logits identically") {
    CascadePlan plan = tiny_plan();
    plan.disc_channels = {4, 8, 1};
    plan.disc_strides = {2, 2, 1};
    PatchDiscriminator d(plan, 6);
    RngStream rng(15);
    d.init(rng);
    Tensor x = random_tensor(3, 3, 64, 128, rng, 0.5);
    Tensor y = random_tensor(3, 3, 64, 128, rng, 0.5);
    Context eval;
    Tensor logits = d.forward(x, y, eval);

    // swap samples 0 and 2
    Tensor xp = x, yp = y;
    const size_t plane = size_t(3) * 64 * 128;
    std::swap_ranges(xp.sample(0), xp.sample(0) + plane, xp.sample(2));
    std::swap_ranges(yp.sample(0), yp.sample(0) + plane, yp.sample(2));
    Tensor logits_p = d.forward(xp, yp, eval);
    const size_t lplane = size_t(logits.c()) * logits.h() * logits.w();
    CHECK(std::memcmp(logits.sample(0), logits_p.sample(2), lplane * sizeof(float)) == 0);
    CHECK(std::memcmp(logits.sample(2), logits_p.sample(0), lplane * sizeof(float)) == 0);
    CHECK(std::memcmp(logits.sample(1), logits_p.sample(1), lplane * sizeof(float)) == 0);
}

TEST_CASE("cascade: forward flows through G1, gradients do not") {
    CascadePlan plan = tiny_plan();
    CascadeState state(plan);
    state.init(21);
    RngStream rng(22);
    Tensor x = random_tensor(1, 3, 64, 128, rng, 0.5);
    Context eval;

    CascadeOutput out = cascade_forward(state, x, eval);
    CHECK(out.y1.same_shape(x));
    CHECK(out.y2.same_shape(x));

    CascadeOutput out_b = cascade_forward(state, x, eval);
    CHECK(std::memcmp(out.y2.data(), out_b.y2.data(), out.y2.numel() * sizeof(float)) == 0);

    // Perturbing a G1 weight changes y2 (information flows forward).
    std::vector<ParamRef> g1_params;
    state.g1.collect("g1", g1_params);
    (*g1_params[0].value)[0] += 0.5f;
    CascadeOutput out_c = cascade_forward(state, x, eval);
    double delta = 0;
    for (size_t i = 0; i < out.y2.numel(); ++i)
        delta += std::abs(double(out_c.y2[i]) - double(out.y2[i]));
    CHECK(delta > 0);
    (*g1_params[0].value)[0] -= 0.5f;

    // Stage-2 losses leave every G1 gradient exactly zero.
    state.g1.zero_grad();
    state.g2.zero_grad();
    state.d2.zero_grad();
    Context train_ctx{true, &rng};
    Tensor y1 = state.g1.forward(x, train_ctx);
    Tensor y2 = state.g2.forward(concat_channels(x, y1), train_ctx);
    Tensor logits = state.d2.forward(x, y2, train_ctx);
    Tensor target = random_tensor(1, 3, 64, 128, rng, 0.5);
    Tensor ones(1, 1, 64, 128, 1.f);
    Tensor g_y2, g_logits;
    generator_loss(logits, y2, target, ones, 100.0, &g_y2, &g_logits);
    auto [gx_d, gy_d] = state.d2.backward(g_logits);
    for (size_t i = 0; i < g_y2.numel(); ++i) g_y2[i] += gy_d[i];
    state.g2.backward(g_y2);

    for (const auto& p : g1_params)
        for (size_t i = 0; i < p.grad->numel(); ++i) CHECK((*p.grad)[i] == 0.f);
}

// ---------------------------------------------------------------------------
// init_params

TEST_CASE("initialization is deterministic with the documented statistics") {
    CascadePlan plan = tiny_plan();
    CascadeState a(plan), b(plan);
    a.init(99);
    b.init(99);
    std::vector<ParamRef> pa, pb;
    a.collect(pa);
    b.collect(pb);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].value->numel() == pb[i].value->numel());
        CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(),
                          pa[i].value->numel() * sizeof(float)) == 0);
    }
    // PReLU slopes all start at 0.25.
    for (const auto& p : pa)
        if (p.name.find(".slope") != std::string::npos)
            for (size_t i = 0; i < p.value->numel(); ++i) CHECK((*p.value)[i] == 0.25f);
}

TEST_CASE("gaussian init sample mean stays within 3 sigma of zero") {
    RngStream rng(1234);
    const int n = 100000;
    Conv2d conv(10, 100, 10, 1, 0);  // 10*100*10*10 = 10^5 weights
    conv.init(rng, 0.02f);
    REQUIRE(conv.weight.numel() == size_t(n));
    double mean = 0;
    for (size_t i = 0; i < conv.weight.numel(); ++i) mean += conv.weight[i];
    mean /= n;
    CHECK(std::abs(mean) < 3.0 * 0.02 / std::sqrt(double(n)));
}

// ---------------------------------------------------------------------------
// Gradient suite (finite differences on 4x4 instances)

TEST_CASE("conv2d gradients match finite differences") {
    RngStream rng(31);
    Conv2d conv(2, 3, 3, 1, 1);
    conv.init(rng, 0.5f);
    for (size_t i = 0; i < conv.bias.numel(); ++i) conv.bias[i] = float(rng.normal(0, 0.2));
    Tensor x = random_tensor(2, 2, 4, 4, rng);
    Context ctx{true, nullptr};
    Readout readout(conv.forward(x, ctx), rng);

    auto loss = [&] { return readout.loss(conv.forward(x, ctx)); };
    conv.zero_grad();
    Tensor y = conv.forward(x, ctx);
    Tensor gx = conv.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(conv.weight, conv.gweight, loss) <= kGradTol);
    CHECK(fd_relative_error(conv.bias, conv.gbias, loss) <= kGradTol);
}

TEST_CASE("strided conv2d gradients match finite differences") {
    RngStream rng(32);
    Conv2d conv(2, 2, 4, 2, 1);
    conv.init(rng, 0.5f);
    Tensor x = random_tensor(2, 2, 4, 4, rng);
    Context ctx{true, nullptr};
    Readout readout(conv.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(conv.forward(x, ctx)); };
    conv.zero_grad();
    conv.forward(x, ctx);
    Tensor gx = conv.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(conv.weight, conv.gweight, loss) <= kGradTol);
}

TEST_CASE("transposed conv gradients match finite differences") {
    RngStream rng(33);
    ConvTranspose2d deconv(3, 2, 4, 2, 1);
    deconv.init(rng, 0.5f);
    Tensor x = random_tensor(2, 3, 2, 2, rng);
    Context ctx{true, nullptr};
    Readout readout(deconv.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(deconv.forward(x, ctx)); };
    deconv.zero_grad();
    deconv.forward(x, ctx);
    Tensor gx = deconv.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(deconv.weight, deconv.gweight, loss) <= kGradTol);
    CHECK(fd_relative_error(deconv.bias, deconv.gbias, loss) <= kGradTol);
}

TEST_CASE("batchnorm gradients match finite differences") {
    RngStream rng(34);
    BatchNorm2d bn(3);
    for (int c = 0; c < 3; ++c) {
        bn.gamma[c] = float(rng.uniform(0.5, 1.5));
        bn.beta[c] = float(rng.uniform(-0.5, 0.5));
    }
    Tensor x = random_tensor(2, 3, 4, 4, rng);
    Context ctx{true, nullptr};
    Readout readout(bn.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(bn.forward(x, ctx)); };
    bn.zero_grad();
    bn.forward(x, ctx);
    Tensor gx = bn.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(bn.gamma, bn.ggamma, loss) <= kGradTol);
    CHECK(fd_relative_error(bn.beta, bn.gbeta, loss) <= kGradTol);
}

TEST_CASE("prelu gradients match finite differences") {
    RngStream rng(35);
    PReLU act(3, 0.25f);
    Tensor x = random_tensor(2, 3, 4, 4, rng);
    // keep |x| away from the kink so finite differences stay two-sided
    for (size_t i = 0; i < x.numel(); ++i)
        if (std::abs(x[i]) < 0.05f) x[i] = x[i] < 0 ? -0.1f : 0.1f;
    Context ctx{true, nullptr};
    Readout readout(act.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(act.forward(x, ctx)); };
    act.zero_grad();
    act.forward(x, ctx);
    Tensor gx = act.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(act.slope, act.gslope, loss) <= kGradTol);
}

TEST_CASE("residual block gradients match finite differences") {
    RngStream rng(36);
    CascadePlan plan;
    ResidualBlock block(2, plan);
    block.init(rng, 0.4f);
    Tensor x = random_tensor(2, 2, 4, 4, rng);
    Context ctx{true, nullptr};
    Readout readout(block.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(block.forward(x, ctx)); };
    block.zero_grad();
    block.forward(x, ctx);
    Tensor gx = block.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
    CHECK(fd_relative_error(block.conv1.weight, block.conv1.gweight, loss) <= kGradTol);
    CHECK(fd_relative_error(block.bn1.gamma, block.bn1.ggamma, loss) <= kGradTol);
    CHECK(fd_relative_error(block.act.slope, block.act.gslope, loss) <= kGradTol);
}

TEST_CASE("concat-skip gradients match finite differences") {
    RngStream rng(37);
    Tensor a = random_tensor(2, 2, 4, 4, rng);
    Tensor b = random_tensor(2, 3, 4, 4, rng);
    Readout readout(concat_channels(a, b), rng);
    auto loss = [&] { return readout.loss(concat_channels(a, b)); };
    Tensor ga, gb;
    split_channels(readout.weights, 2, ga, gb);
    CHECK(fd_relative_error(a, ga, loss) <= kGradTol);
    CHECK(fd_relative_error(b, gb, loss) <= kGradTol);
}

TEST_CASE("tanh output gradients match finite differences") {
    RngStream rng(38);
    Tanh tanh_layer;
    Tensor x = random_tensor(2, 3, 4, 4, rng);
    Context ctx;
    Readout readout(tanh_layer.forward(x, ctx), rng);
    auto loss = [&] { return readout.loss(tanh_layer.forward(x, ctx)); };
    tanh_layer.forward(x, ctx);
    Tensor gx = tanh_layer.backward(readout.weights);
    CHECK(fd_relative_error(x, gx, loss) <= kGradTol);
}

TEST_CASE("both loss forms match finite differences") {
    RngStream rng(39);
    Tensor lr = random_tensor(2, 1, 2, 2, rng);
    Tensor lf = random_tensor(2, 1, 2, 2, rng);

    Tensor gr, gf;
    adversarial_loss_d(lr, lf, &gr, &gf);
    auto d_loss = [&] { return adversarial_loss_d(lr, lf); };
    CHECK(fd_relative_error(lr, gr, d_loss) <= kGradTol);
    CHECK(fd_relative_error(lf, gf, d_loss) <= kGradTol);

    Tensor y_fake = random_tensor(2, 3, 4, 4, rng);
    Tensor y_target = random_tensor(2, 3, 4, 4, rng);
    Tensor mask(2, 1, 4, 4);
    for (size_t i = 0; i < mask.numel(); ++i) mask[i] = rng.uniform() < 0.6 ? 1.f : 0.f;
    Tensor g_fake, g_logits;
    generator_loss(lf, y_fake, y_target, mask, 100.0, &g_fake, &g_logits);
    auto g_total = [&] {
        return generator_loss(lf, y_fake, y_target, mask, 100.0).total;
    };
    CHECK(fd_relative_error(y_fake, g_fake, g_total) <= kGradTol);
    CHECK(fd_relative_error(lf, g_logits, g_total) <= kGradTol);
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST_CASE("checkpoint round-trips parameters, buffers and optimizer state") {
    testutil::TempDir tmp("ckpt");
    CascadePlan plan = tiny_plan();
    CascadeState state(plan);
    state.init(77);
    state.step = 42;
    CascadeOptimizers opts = CascadeOptimizers::create({1e-3, 0.5, 0.999, 1e-8}, state);
    // put something non-trivial in the moments
    RngStream rng(3);
    for (auto& m : opts.g1.first_moments())
        for (size_t i = 0; i < m.numel(); ++i) m[i] = float(rng.normal(0, 0.1));
    opts.g1.set_t(7);

    nn::CheckpointMeta meta;
    meta.step = 42;
    meta.epoch = 3;
    meta.rng_state = 0xabcdef;
    meta.plan = plan;
    save_checkpoint(tmp.file("a.ckpt"), state, &opts, meta);

    std::unique_ptr<CascadeState> loaded;
    CascadeOptimizers loaded_opts;
    nn::CheckpointMeta back =
        load_checkpoint(tmp.file("a.ckpt"), loaded, &loaded_opts, {1e-3, 0.5, 0.999, 1e-8});
    CHECK(back.step == 42);
    CHECK(back.epoch == 3);
    CHECK(back.rng_state == 0xabcdef);
    CHECK(back.plan == plan);
    CHECK(loaded_opts.g1.t() == 7);

    std::vector<ParamRef> pa, pb;
    state.collect(pa);
    loaded->collect(pb);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i)
        CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(),
                          pa[i].value->numel() * sizeof(float)) == 0);
    auto& ma = opts.g1.first_moments();
    auto& mb = loaded_opts.g1.first_moments();
    REQUIRE(ma.size() == mb.size());
    for (size_t i = 0; i < ma.size(); ++i)
        CHECK(std::memcmp(ma[i].data(), mb[i].data(), ma[i].numel() * sizeof(float)) == 0);

    // Re-saving the loaded state reproduces the file byte for byte.
    nn::save_checkpoint(tmp.file("b.ckpt"), *loaded, &loaded_opts, back);
    CHECK(testutil::same_bytes(tmp.file("a.ckpt"), tmp.file("b.ckpt")));
}

TEST_CASE("checkpoint loader rejects malformed files") {
    testutil::TempDir tmp("ckpt_bad");
    testutil::write_text(tmp.file("junk.ckpt"), "definitely not a checkpoint");
    std::unique_ptr<CascadeState> state;
    CHECK_THROWS_AS(load_checkpoint(tmp.file("junk.ckpt"), state, nullptr, {}), RuntimeFailure);
}
