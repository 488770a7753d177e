// Acceptance suite: one pass/fail line per criterion.
//
// Criteria:
//   metric-closed-forms   IS/FID analytic values
//   oracle-equivalence    Poisson vs dense solve, dilation vs Minkowski,
//                         masked L1 and IS vs naive loops
//   gradient-suite        finite differences on every differentiable primitive
//   structural-invariants residual identity, shape preservation, stage
//                         isolation, ln2 at zero logits
//   overfit-smoke         stage-2 L1 halves on 16 fixed pairs within 2000 steps
//   determinism           synth -> train 50 steps -> generate, byte-identical twice
//   paper-default-echo    shipped defaults match the training recipe
//   scale-property        10k-image generation under a fixed memory ceiling

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqforge/checkpoint.hpp"
#include "seqforge/cli.hpp"
#include "seqforge/image_io.hpp"
#include "seqforge/losses.hpp"
#include "seqforge/metrics.hpp"
#include "seqforge/morphology.hpp"
#include "seqforge/poisson.hpp"
#include "seqforge/trainer.hpp"
#include "testutil.hpp"

using namespace seqforge;
using nn::CascadePlan;
using nn::CascadeState;
using nn::Context;
using nn::ParamRef;
using nn::Tensor;

namespace {

struct Harness {
    int failures = 0;

    void criterion(const std::string& name, const std::function<std::string()>& body) {
        auto start = std::chrono::steady_clock::now();
        try {
            std::string detail = body();
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                        start).count();
            std::ostringstream line;
            line << "[PASS] " << name;
            if (!detail.empty()) line << " (" << detail << ")";
            line << " [" << std::fixed << std::setprecision(1) << secs << "s]";
            std::cout << line.str() << std::endl;
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "[FAIL] " << name << ": " << e.what() << std::endl;
        }
    }
};

void require(bool cond, const std::string& what) {
    if (!cond) throw std::runtime_error(what);
}

Tensor random_tensor(int n, int c, int h, int w, RngStream& rng, double scale = 1.0) {
    Tensor t(n, c, h, w);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = float(rng.normal(0.0, scale));
    return t;
}

// --------------------------------------------------------------------------
// shared plans / data

CascadePlan smoke_plan() {
    CascadePlan plan;
    plan.encoder_channels = {8, 16, 32, 64, 64, 64};
    plan.disc_channels = {16, 32, 64, 1};
    plan.disc_strides = {2, 2, 2, 1};
    return plan;
}

const char* kCorpusText =
    "violet ember quartz nomad drift harbor tundra velvet cinder orbit\n"
    "maple onyx copper fathom ridge summit lantern meadow\n";

RunConfig smoke_config(const std::string& corpus_path) {
    RunConfig cfg = RunConfig::defaults();
    cfg.corpus_path = corpus_path;
    cfg.renderer.target_text_height = 24;
    cfg.trainer.plan = smoke_plan();
    cfg.generation.batch_size = 32;
    return cfg;
}

// 16 fixed (semantic, stylized-real) pairs as network tensors.
train::TrainBatch fixed_pairs(const RunConfig& cfg, int count, uint64_t seed) {
    Corpus corpus = Corpus::from_string(kCorpusText);
    FontCatalogue fonts = FontCatalogue::builtin_only();
    std::vector<ImageGrid> semantics, reals;
    std::vector<BinaryMask> masks;
    for (int i = 0; i < count; ++i) {
        SemanticSample s = synthesize_sample(corpus, fonts, cfg.renderer, seed + uint64_t(i));
        reals.push_back(train::stylize_semantic(s, 0x5717u));
        semantics.push_back(std::move(s.semantic));
        masks.push_back(std::move(s.foreground_mask));
    }
    return {train::images_to_net(semantics), train::images_to_net(reals),
            train::masks_to_tensor(masks)};
}

train::TrainBatch slice_batch(const train::TrainBatch& all, int start, int n) {
    train::TrainBatch out;
    out.semantic = Tensor(n, all.semantic.c(), all.semantic.h(), all.semantic.w());
    out.real = Tensor(n, all.real.c(), all.real.h(), all.real.w());
    out.foreground = Tensor(n, 1, all.foreground.h(), all.foreground.w());
    const size_t ps = size_t(all.semantic.c()) * all.semantic.h() * all.semantic.w();
    const size_t pf = size_t(all.foreground.h()) * all.foreground.w();
    for (int k = 0; k < n; ++k) {
        std::copy(all.semantic.sample(start + k), all.semantic.sample(start + k) + ps,
                  out.semantic.sample(k));
        std::copy(all.real.sample(start + k), all.real.sample(start + k) + ps,
                  out.real.sample(k));
        std::copy(all.foreground.sample(start + k), all.foreground.sample(start + k) + pf,
                  out.foreground.sample(k));
    }
    return out;
}

// --------------------------------------------------------------------------
// finite differences (same scheme as the unit suite)

double fd_relative_error(Tensor& target, const Tensor& analytic,
                         const std::function<double()>& loss) {
    const float h = 0.0078125f;
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

struct Readout {
    Tensor weights;
    Readout(const Tensor& like, RngStream& rng) : weights(Tensor::zeros_like(like)) {
        for (size_t i = 0; i < weights.numel(); ++i) weights[i] = float(rng.normal(0.0, 1.0));
    }
    double loss(const Tensor& y) const {
        double acc = 0;
        for (size_t i = 0; i < y.numel(); ++i) acc += double(weights[i]) * y[i];
        return acc;
    }
};

// --------------------------------------------------------------------------
// criteria

std::string criterion_metric_closed_forms() {
    using namespace seqforge::metrics;
    const int K = 6;
    ProbMatrix uniform = ProbMatrix::Constant(24, K, 1.0 / K);
    auto [mu, su] = inception_score(uniform, 4);
    require(std::abs(mu - 1.0) <= 1e-9, "IS(uniform) != 1");
    require(su <= 1e-9, "IS(uniform) std != 0");

    ProbMatrix onehot = ProbMatrix::Zero(K * 5, K);
    for (int i = 0; i < K * 5; ++i) onehot(i, i % K) = 1.0;
    auto [mo, so] = inception_score(onehot, 1);
    require(std::abs(mo - double(K)) <= 1e-9, "IS(one-hot) != K");

    GaussianStats a{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
    require(frechet_distance(a, a) <= 1e-6, "FID(a,a) > 1e-6");

    GaussianStats m0{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
    GaussianStats m3{Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Identity(1, 1)};
    require(std::abs(frechet_distance(m0, m3) - 9.0) <= 1e-9, "1-D FID != 9");

    GaussianStats i2{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    GaussianStats i8{Eigen::VectorXd::Zero(2), 4.0 * Eigen::MatrixXd::Identity(2, 2)};
    require(std::abs(frechet_distance(i2, i8) - 2.0) <= 1e-9, "2-D FID != 2");
    return "5 closed forms";
}

std::string criterion_oracle_equivalence() {
    RngStream rng(0xACCE);
    // Poisson vs dense
    double worst_poisson = 0;
    for (int trial = 0; trial < 100; ++trial) {
        ImageGrid src(8, 8, 1), dst(8, 8, 1);
        for (size_t i = 0; i < src.size(); ++i) src.data()[i] = float(rng.uniform());
        for (size_t i = 0; i < dst.size(); ++i) dst.data()[i] = float(rng.uniform());
        BinaryMask mask(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) mask.at(y, x) = rng.uniform() < 0.4 ? 1 : 0;

        ImageGrid ours = poisson_blend(src, dst, mask, 1e-9);

        // dense oracle
        std::vector<int> index(64, -1);
        std::vector<std::pair<int, int>> cells;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                if (mask.at(y, x)) {
                    index[y * 8 + x] = int(cells.size());
                    cells.emplace_back(y, x);
                }
        ImageGrid oracle = dst;
        if (!cells.empty()) {
            const int n = int(cells.size());
            const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i) {
                auto [y, x] = cells[i];
                int degree = 0;
                for (int k = 0; k < 4; ++k) {
                    int ny = y + dy[k], nx = x + dx[k];
                    if (ny < 0 || nx < 0 || ny >= 8 || nx >= 8) continue;
                    ++degree;
                    b(i) += double(src.at(y, x, 0)) - double(src.at(ny, nx, 0));
                    int j = index[ny * 8 + nx];
                    if (j >= 0)
                        A(i, j) = -1;
                    else
                        b(i) += dst.at(ny, nx, 0);
                }
                A(i, i) = degree;
            }
            Eigen::VectorXd sol = A.partialPivLu().solve(b);
            for (int i = 0; i < n; ++i)
                oracle.at(cells[i].first, cells[i].second, 0) =
                    float(std::clamp(sol(i), 0.0, 1.0));
        }
        for (size_t i = 0; i < ours.size(); ++i)
            worst_poisson =
                std::max(worst_poisson, std::abs(double(ours.data()[i]) - oracle.data()[i]));
    }
    require(worst_poisson <= 1e-6, "poisson vs dense solve: " + std::to_string(worst_poisson));

    // dilation vs Minkowski union
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask m(16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) m.at(y, x) = rng.uniform() < 0.15 ? 1 : 0;
        int radius = 1 + rng.uniform_int(3);
        int iterations = 1 + rng.uniform_int(2);

        BinaryMask ours = dilate(m, radius, iterations);
        BinaryMask oracle = m;
        for (int it = 0; it < iterations; ++it) {
            BinaryMask next(16, 16);
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    if (!oracle.at(y, x)) continue;
                    for (int dy = -radius; dy <= radius; ++dy)
                        for (int dx = -radius; dx <= radius; ++dx) {
                            if (dy * dy + dx * dx > radius * radius) continue;
                            int ny = y + dy, nx = x + dx;
                            if (ny >= 0 && nx >= 0 && ny < 16 && nx < 16) next.at(ny, nx) = 1;
                        }
                }
            oracle = next;
        }
        require(ours == oracle, "dilation differs from Minkowski oracle");
    }

    // masked L1 vs naive loop
    Tensor y_fake = random_tensor(2, 3, 6, 6, rng);
    Tensor y_target = random_tensor(2, 3, 6, 6, rng);
    Tensor mask(2, 1, 6, 6);
    for (size_t i = 0; i < mask.numel(); ++i) mask[i] = rng.uniform() < 0.5 ? 1.f : 0.f;
    Tensor logits(2, 1, 1, 1, 0.f);
    nn::GeneratorLoss gl = nn::generator_loss(logits, y_fake, y_target, mask, 1.0);
    double acc = 0, msum = 0;
    for (int n = 0; n < 2; ++n)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                msum += mask(n, 0, y, x);
                if (mask(n, 0, y, x) == 0.f) continue;
                for (int c = 0; c < 3; ++c)
                    acc += std::abs(double(y_fake(n, c, y, x)) - double(y_target(n, c, y, x)));
            }
    require(std::abs(gl.l1 - acc / (msum * 3)) <= 1e-9, "masked L1 vs loop oracle");

    // IS vs naive loop
    metrics::ProbMatrix probs(10, 4);
    for (int i = 0; i < 10; ++i) {
        double sum = 0;
        for (int k = 0; k < 4; ++k) {
            probs(i, k) = rng.uniform(0.05, 1.0);
            sum += probs(i, k);
        }
        for (int k = 0; k < 4; ++k) probs(i, k) /= sum;
    }
    auto [is_mean, is_std] = metrics::inception_score(probs, 2);
    double split_scores[2];
    for (int s = 0; s < 2; ++s) {
        int lo = s * 5, hi = lo + 5;
        double marginal[4] = {0, 0, 0, 0};
        for (int i = lo; i < hi; ++i)
            for (int k = 0; k < 4; ++k) marginal[k] += probs(i, k) / 5.0;
        double mean_kl = 0;
        for (int i = lo; i < hi; ++i)
            for (int k = 0; k < 4; ++k)
                if (probs(i, k) > 0)
                    mean_kl += probs(i, k) * std::log(probs(i, k) / marginal[k]) / 5.0;
        split_scores[s] = std::exp(mean_kl);
    }
    double om = (split_scores[0] + split_scores[1]) / 2;
    require(std::abs(is_mean - om) <= 1e-9, "IS vs loop oracle");
    (void)is_std;
    return "poisson<=1e-6, dilation exact, loops<=1e-9";
}

std::string criterion_gradient_suite() {
    RngStream rng(0x9AD);
    const double tol = 1e-4;
    double worst = 0;
    auto track = [&](double err, const char* what) {
        worst = std::max(worst, err);
        require(err <= tol, std::string(what) + " grad err " + std::to_string(err));
    };
    Context ctx{true, nullptr};

    {
        nn::Conv2d conv(2, 3, 3, 1, 1);
        conv.init(rng, 0.5f);
        Tensor x = random_tensor(2, 2, 4, 4, rng);
        Readout readout(conv.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(conv.forward(x, ctx)); };
        conv.zero_grad();
        conv.forward(x, ctx);
        Tensor gx = conv.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "conv.x");
        track(fd_relative_error(conv.weight, conv.gweight, loss), "conv.w");
        track(fd_relative_error(conv.bias, conv.gbias, loss), "conv.b");
    }
    {
        nn::ConvTranspose2d deconv(3, 2, 4, 2, 1);
        deconv.init(rng, 0.5f);
        Tensor x = random_tensor(2, 3, 2, 2, rng);
        Readout readout(deconv.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(deconv.forward(x, ctx)); };
        deconv.zero_grad();
        deconv.forward(x, ctx);
        Tensor gx = deconv.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "deconv.x");
        track(fd_relative_error(deconv.weight, deconv.gweight, loss), "deconv.w");
    }
    {
        nn::BatchNorm2d bn(3);
        for (int c = 0; c < 3; ++c) {
            bn.gamma[c] = float(rng.uniform(0.5, 1.5));
            bn.beta[c] = float(rng.uniform(-0.5, 0.5));
        }
        Tensor x = random_tensor(2, 3, 4, 4, rng);
        Readout readout(bn.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(bn.forward(x, ctx)); };
        bn.zero_grad();
        bn.forward(x, ctx);
        Tensor gx = bn.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "bn.x");
        track(fd_relative_error(bn.gamma, bn.ggamma, loss), "bn.gamma");
        track(fd_relative_error(bn.beta, bn.gbeta, loss), "bn.beta");
    }
    {
        nn::PReLU act(3, 0.25f);
        Tensor x = random_tensor(2, 3, 4, 4, rng);
        for (size_t i = 0; i < x.numel(); ++i)
            if (std::abs(x[i]) < 0.05f) x[i] = x[i] < 0 ? -0.1f : 0.1f;
        Readout readout(act.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(act.forward(x, ctx)); };
        act.zero_grad();
        act.forward(x, ctx);
        Tensor gx = act.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "prelu.x");
        track(fd_relative_error(act.slope, act.gslope, loss), "prelu.a");
    }
    {
        CascadePlan plan;
        nn::ResidualBlock block(2, plan);
        block.init(rng, 0.4f);
        Tensor x = random_tensor(2, 2, 4, 4, rng);
        Readout readout(block.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(block.forward(x, ctx)); };
        block.zero_grad();
        block.forward(x, ctx);
        Tensor gx = block.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "resblock.x");
        track(fd_relative_error(block.conv1.weight, block.conv1.gweight, loss), "resblock.w1");
        track(fd_relative_error(block.act.slope, block.act.gslope, loss), "resblock.a");
    }
    {
        Tensor a = random_tensor(2, 2, 4, 4, rng);
        Tensor b = random_tensor(2, 3, 4, 4, rng);
        Readout readout(nn::concat_channels(a, b), rng);
        auto loss = [&] { return readout.loss(nn::concat_channels(a, b)); };
        Tensor ga, gb;
        nn::split_channels(readout.weights, 2, ga, gb);
        track(fd_relative_error(a, ga, loss), "concat.a");
        track(fd_relative_error(b, gb, loss), "concat.b");
    }
    {
        nn::Tanh tanh_layer;
        Tensor x = random_tensor(2, 3, 4, 4, rng);
        Readout readout(tanh_layer.forward(x, ctx), rng);
        auto loss = [&] { return readout.loss(tanh_layer.forward(x, ctx)); };
        tanh_layer.forward(x, ctx);
        Tensor gx = tanh_layer.backward(readout.weights);
        track(fd_relative_error(x, gx, loss), "tanh.x");
    }
    {
        Tensor lr = random_tensor(2, 1, 2, 2, rng);
        Tensor lf = random_tensor(2, 1, 2, 2, rng);
        Tensor gr, gf;
        nn::adversarial_loss_d(lr, lf, &gr, &gf);
        auto d_loss = [&] { return nn::adversarial_loss_d(lr, lf); };
        track(fd_relative_error(lr, gr, d_loss), "d_loss.real");
        track(fd_relative_error(lf, gf, d_loss), "d_loss.fake");

        Tensor y_fake = random_tensor(2, 3, 4, 4, rng);
        Tensor y_target = random_tensor(2, 3, 4, 4, rng);
        Tensor mask(2, 1, 4, 4);
        for (size_t i = 0; i < mask.numel(); ++i) mask[i] = rng.uniform() < 0.6 ? 1.f : 0.f;
        Tensor g_fake, g_logits;
        nn::generator_loss(lf, y_fake, y_target, mask, 100.0, &g_fake, &g_logits);
        auto g_loss = [&] {
            return nn::generator_loss(lf, y_fake, y_target, mask, 100.0).total;
        };
        track(fd_relative_error(y_fake, g_fake, g_loss), "g_loss.y");
        track(fd_relative_error(lf, g_logits, g_loss), "g_loss.logits");
    }
    std::ostringstream detail;
    detail << "worst rel err " << std::scientific << std::setprecision(2) << worst;
    return detail.str();
}

std::string criterion_structural_invariants() {
    RngStream rng(0x57);
    {
        CascadePlan plan;
        nn::ResidualBlock block(3, plan);  // zero-initialized branch
        Tensor x = random_tensor(2, 3, 4, 4, rng);
        Context ctx{true, nullptr};
        Tensor y = block.forward(x, ctx);
        require(std::memcmp(x.data(), y.data(), x.numel() * sizeof(float)) == 0,
                "zeroed residual branch is not a bit-exact identity");
    }
    {
        CascadePlan plan = smoke_plan();
        nn::Generator g(plan, 3);
        RngStream init_rng(1);
        g.init(init_rng);
        Tensor x = random_tensor(2, 3, 64, 128, rng, 0.5);
        Context eval;
        Tensor y = g.forward(x, eval);
        require(y.n() == 2 && y.c() == 3 && y.h() == 64 && y.w() == 128,
                "generator does not preserve 128x64x3 extents");
    }
    {
        CascadePlan plan = smoke_plan();
        CascadeState state(plan);
        state.init(2);
        Tensor x = random_tensor(1, 3, 64, 128, rng, 0.5);
        Context ctx{true, &rng};
        state.g1.zero_grad();
        Tensor y1 = state.g1.forward(x, ctx);
        Tensor y2 = state.g2.forward(nn::concat_channels(x, y1), ctx);
        Tensor logits = state.d2.forward(x, y2, ctx);
        Tensor target = random_tensor(1, 3, 64, 128, rng, 0.5);
        Tensor ones(1, 1, 64, 128, 1.f);
        Tensor g_y2, g_logits;
        nn::generator_loss(logits, y2, target, ones, 100.0, &g_y2, &g_logits);
        auto [gx_d, gy_d] = state.d2.backward(g_logits);
        for (size_t i = 0; i < g_y2.numel(); ++i) g_y2[i] += gy_d[i];
        state.g2.backward(g_y2);
        std::vector<ParamRef> g1_params;
        state.g1.collect("g1", g1_params);
        for (const auto& p : g1_params)
            for (size_t i = 0; i < p.grad->numel(); ++i)
                require((*p.grad)[i] == 0.f, "stage-2 loss leaked gradient into G1");
    }
    {
        Tensor zeros(1, 1, 3, 3, 0.f);
        const double ln2 = 0.6931471805599453;
        require(std::abs(nn::adversarial_loss_d(zeros, zeros) - ln2) <= 1e-9,
                "D loss at zero logits != ln 2");
        require(std::abs(nn::adversarial_loss_g(zeros) - ln2) <= 1e-9,
                "G adversarial loss at zero logits != ln 2");
    }
    return "identity, shapes, isolation, ln2";
}

std::string criterion_overfit_smoke() {
    testutil::TempDir tmp("accept_overfit");
    RunConfig cfg = smoke_config("");
    train::TrainConfig tcfg = cfg.trainer;
    tcfg.batch_size = 4;
    tcfg.seed = 0xF17;

    train::TrainBatch all = fixed_pairs(cfg, 16, 1000);
    CascadeState state(tcfg.plan);
    state.init(tcfg.seed);
    nn::CascadeOptimizers opts = nn::CascadeOptimizers::create(tcfg.adam(), state);
    RngStream rng(tcfg.seed);

    const int max_steps = 2000;
    double initial = 0;
    std::vector<double> window;
    int steps = 0;
    for (int step = 0; step < max_steps; ++step) {
        int b = step % 4;
        train::TrainBatch batch = slice_batch(all, b * 4, 4);
        train::LossRecord rec = train_step(state, opts, batch, tcfg, rng);
        ++steps;
        if (step < 10) {
            initial += rec.g2_l1 / 10.0;
            continue;
        }
        window.push_back(rec.g2_l1);
        if (window.size() > 25) window.erase(window.begin());
        if (window.size() == 25) {
            double mean = 0;
            for (double v : window) mean += v / 25.0;
            if (mean <= 0.45 * initial) break;
        }
    }
    double final_mean = 0;
    for (double v : window) final_mean += v / double(window.size());
    std::ostringstream detail;
    detail << "stage-2 L1 " << std::setprecision(3) << initial << " -> " << final_mean << " in "
           << steps << " steps";
    require(final_mean <= 0.5 * initial, "stage-2 L1 did not halve within 2000 steps (" +
                                             detail.str() + ")");
    return detail.str();
}

std::string criterion_determinism() {
    testutil::TempDir tmp("accept_det");
    std::string corpus = testutil::write_text(tmp.file("corpus.txt"), kCorpusText);

    auto run_pipeline = [&](const std::string& tag) {
        RunConfig cfg = smoke_config(corpus);
        cfg.trainer.plan.encoder_channels = {4, 8, 8, 8, 8, 8};  // keep 50 steps quick
        cfg.trainer.plan.disc_channels = {8, 16, 1};
        cfg.trainer.plan.disc_strides = {2, 2, 1};
        train::TrainConfig tcfg = cfg.trainer;
        tcfg.batch_size = 4;
        tcfg.seed = 99;

        std::string dir = tmp.file(tag);
        std::filesystem::create_directories(dir);
        cli::cmd_synth(cfg, 7, 32, dir + "/synth");

        // pair the synthesized semantics with stylized targets
        Corpus corp = Corpus::from_file(corpus);
        FontCatalogue fonts = FontCatalogue::builtin_only();
        for (int i = 0; i < 32; ++i) {
            SemanticSample s = synthesize_sample(corp, fonts, cfg.renderer, 7 + uint64_t(i));
            char stem[16];
            std::snprintf(stem, sizeof(stem), "%06d", i);
            write_png(dir + "/synth/" + std::string(stem) + "_real.png",
                      train::stylize_semantic(s, 0x5717u));
        }

        train::PairedDiskDataset data(dir + "/synth", tcfg.batch_size, tcfg.seed);
        CascadeState state(tcfg.plan);
        state.init(tcfg.seed);
        nn::CascadeOptimizers opts = nn::CascadeOptimizers::create(tcfg.adam(), state);
        RngStream rng(tcfg.seed);
        const int per_epoch = data.batches_per_epoch();
        for (int step = 0; step < 50; ++step) {
            train::TrainBatch batch = data.batch(step / per_epoch, step % per_epoch);
            train_step(state, opts, batch, tcfg, rng);
        }
        nn::CheckpointMeta meta;
        meta.step = state.step;
        meta.rng_state = rng.state();
        meta.plan = tcfg.plan;
        std::string ckpt = dir + "/final.ckpt";
        nn::save_checkpoint(ckpt, state, &opts, meta);

        cli::cmd_generate(cfg, 31, ckpt, 32, dir + "/gen", false);
        return dir;
    };

    std::string run1 = run_pipeline("run1");
    std::string run2 = run_pipeline("run2");

    require(testutil::same_bytes(run1 + "/final.ckpt", run2 + "/final.ckpt"),
            "checkpoints differ between identical runs");
    for (int i = 0; i < 32; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%08d.png", i);
        require(testutil::same_bytes(run1 + "/gen/" + name, run2 + "/gen/" + name),
                std::string("generated image differs: ") + name);
    }
    require(testutil::same_bytes(run1 + "/gen/manifest.jsonl", run2 + "/gen/manifest.jsonl"),
            "manifests differ");
    return "checkpoint + 32 images byte-identical";
}

std::string criterion_paper_default_echo() {
    RunConfig cfg = RunConfig::defaults();
    require(cfg.trainer.lambda_l1 == 100.0, "lambda != 100");
    require(cfg.trainer.learning_rate == 0.0002, "learning rate != 0.0002");
    require(cfg.trainer.batch_size == 64, "batch size != 64");
    require(cfg.trainer.epochs == 200, "epochs != 200");
    require(cfg.renderer.image_width == 128 && cfg.renderer.image_height == 64,
            "image size != 128x64");
    require(cfg.trainer.plan.prelu_init == 0.25f, "PReLU init != 0.25");
    require(cfg.trainer.plan.image_width == 128 && cfg.trainer.plan.image_height == 64,
            "plan size != 128x64");
    return "lambda=100 lr=0.0002 batch=64 epochs=200 128x64 prelu=0.25";
}

std::string criterion_scale_property(const std::string& scratch_root) {
    std::string dir = scratch_root + "/scale";
    std::filesystem::create_directories(dir);
    std::string corpus = testutil::write_text(dir + "/corpus.txt", kCorpusText);

    RunConfig cfg = smoke_config(corpus);
    cfg.trainer.plan.encoder_channels = {4, 8, 8, 8, 8, 8};
    cfg.trainer.plan.disc_channels = {8, 16, 1};
    cfg.trainer.plan.disc_strides = {2, 2, 1};

    // an initialized (untrained) cascade suffices to exercise generation
    CascadeState state(cfg.trainer.plan);
    state.init(12345);
    nn::CheckpointMeta meta;
    meta.plan = cfg.trainer.plan;
    std::string ckpt = dir + "/init.ckpt";
    nn::save_checkpoint(ckpt, state, nullptr, meta);

    const int kCount = 10000;
    cli::cmd_generate(cfg, 40000, ckpt, kCount, dir + "/gen", true);

    struct rusage usage;
    getrusage(RUSAGE_SELF, &usage);
    const long peak_kb = usage.ru_maxrss;
    const long ceiling_kb = 512 * 1024;
    require(peak_kb < ceiling_kb, "peak RSS " + std::to_string(peak_kb) + " KB over the " +
                                      std::to_string(ceiling_kb) + " KB ceiling");

    // manifest count and label round-trip
    std::ifstream manifest(dir + "/gen/manifest.jsonl");
    require(manifest.good(), "manifest missing");
    Corpus corp = Corpus::from_file(corpus);
    FontCatalogue fonts = FontCatalogue::builtin_only();
    std::string line;
    int records = 0;
    while (std::getline(manifest, line)) {
        nlohmann::json rec = nlohmann::json::parse(line);
        require(!rec.at("text").get<std::string>().empty(), "empty label in manifest");
        if (records % 500 == 0) {
            uint64_t seed = rec.at("seed").get<uint64_t>();
            SemanticSample s = synthesize_sample(corp, fonts, cfg.renderer, seed);
            require(rec.at("text").get<std::string>() == s.text,
                    "label does not round-trip at record " + std::to_string(records));
            require(std::filesystem::exists(dir + "/gen/" +
                                            rec.at("image_path").get<std::string>()),
                    "missing image file at record " + std::to_string(records));
        }
        ++records;
    }
    require(records == kCount, "manifest holds " + std::to_string(records) + " records");
    std::ostringstream detail;
    detail << records << " records, peak RSS " << peak_kb / 1024 << " MB";
    return detail.str();
}

}  // namespace

int main() {
    Harness harness;
    testutil::TempDir scratch("acceptance");

    harness.criterion("metric-closed-forms", criterion_metric_closed_forms);
    harness.criterion("oracle-equivalence", criterion_oracle_equivalence);
    harness.criterion("gradient-suite", criterion_gradient_suite);
    harness.criterion("structural-invariants", criterion_structural_invariants);
    harness.criterion("overfit-smoke", criterion_overfit_smoke);
    harness.criterion("determinism", criterion_determinism);
    harness.criterion("paper-default-echo", criterion_paper_default_echo);
    harness.criterion("scale-property", [&] { return criterion_scale_property(scratch.path()); });

    std::cout << "ACCEPTANCE: " << (8 - harness.failures) << "/8 criteria passed" << std::endl;
    return harness.failures == 0 ? 0 : 1;
}
