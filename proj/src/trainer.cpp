#include "seqforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "seqforge/image_io.hpp"

namespace seqforge {
namespace train {

namespace fs = std::filesystem;
using nn::Context;

void TrainConfig::validate() const {
    if (lambda_l1 <= 0) throw ConfigError("trainer: lambda must be > 0");
    if (learning_rate <= 0) throw ConfigError("trainer: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("trainer: epochs must be >= 0");
    if (checkpoint_interval_epochs < 1) throw ConfigError("trainer: checkpoint interval >= 1");
    plan.validate();
}

namespace {

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
    return out;
}

void require_finite(const LossRecord& rec) {
    for (double v : {rec.d1_loss, rec.g1_adv, rec.g1_l1, rec.d2_loss, rec.g2_adv, rec.g2_l1})
        if (!std::isfinite(v))
            throw RuntimeFailure("train_step: non-finite loss at step " +
                                 std::to_string(rec.step) + " (d1=" + std::to_string(rec.d1_loss) +
                                 " g1=" + std::to_string(rec.g1_adv + rec.g1_l1) +
                                 " d2=" + std::to_string(rec.d2_loss) +
                                 " g2=" + std::to_string(rec.g2_adv + rec.g2_l1) + ")");
}

// Discriminator update: the BCE objective separates into a real and a fake
// term, so each pass runs forward + backward before the other's forward
// overwrites the layer caches.
double update_discriminator(nn::PatchDiscriminator& d, nn::Adam& opt, const Tensor& x,
                            const Tensor& real_pair, const Tensor& fake, const Context& ctx) {
    d.zero_grad();
    Tensor logits_real = d.forward(x, real_pair, ctx);
    Tensor grad_real = nn::Tensor::zeros_like(logits_real);
    const double n = double(logits_real.numel());
    double loss = 0;
    for (size_t i = 0; i < logits_real.numel(); ++i) {
        loss += 0.5 * nn::softplus(-double(logits_real[i]));
        grad_real[i] = float(-(1.0 / (1.0 + std::exp(double(logits_real[i])))) / (2 * n));
    }
    d.backward(grad_real);

    Tensor logits_fake = d.forward(x, fake, ctx);
    Tensor grad_fake = nn::Tensor::zeros_like(logits_fake);
    for (size_t i = 0; i < logits_fake.numel(); ++i) {
        loss += 0.5 * nn::softplus(double(logits_fake[i]));
        grad_fake[i] = float((1.0 / (1.0 + std::exp(-double(logits_fake[i])))) / (2 * n));
    }
    d.backward(grad_fake);

    std::vector<nn::ParamRef> params;
    d.collect("d", params);
    opt.step(params);
    return loss / n;
}

}  // namespace

LossRecord train_step(CascadeState& state, CascadeOptimizers& opts, const TrainBatch& batch,
                      const TrainConfig& config, RngStream& rng) {
    if (batch.semantic.n() != batch.real.n() || batch.semantic.n() != batch.foreground.n())
        throw Error("train_step: batch length mismatch");
    Context ctx{true, &rng};
    LossRecord rec;
    rec.step = state.step + 1;

    const Tensor& x = batch.semantic;
    Tensor t1 = nn::stage1_target(batch.real, batch.foreground);

    // Stage 1 ----------------------------------------------------------
    Tensor y1 = state.g1.forward(x, ctx);
    rec.d1_loss = update_discriminator(state.d1, opts.d1, x, t1, y1, ctx);

    state.g1.zero_grad();
    state.d1.zero_grad();
    Tensor logits1 = state.d1.forward(x, y1, ctx);
    Tensor g_y1_l1, g_logits1;
    nn::GeneratorLoss gl1 = nn::generator_loss(logits1, y1, t1, batch.foreground,
                                               config.lambda_l1, &g_y1_l1, &g_logits1);
    rec.g1_adv = gl1.adv;
    rec.g1_l1 = gl1.l1;
    if (gl1.empty_mask) rec.empty_mask_batches++;
    auto [gx1_unused, g_y1_adv] = state.d1.backward(g_logits1);
    state.g1.backward(add(g_y1_adv, g_y1_l1));
    {
        std::vector<nn::ParamRef> params;
        state.g1.collect("g1", params);
        opts.g1.step(params);
    }

    // Stage 2 ----------------------------------------------------------
    Tensor x2 = nn::concat_channels(x, y1);  // y1 is data here, no gradient path
    Tensor y2 = state.g2.forward(x2, ctx);
    rec.d2_loss = update_discriminator(state.d2, opts.d2, x, batch.real, y2, ctx);

    state.g2.zero_grad();
    state.d2.zero_grad();
    Tensor logits2 = state.d2.forward(x, y2, ctx);
    Tensor ones(batch.foreground.n(), 1, batch.foreground.h(), batch.foreground.w(), 1.f);
    Tensor g_y2_l1, g_logits2;
    nn::GeneratorLoss gl2 = nn::generator_loss(logits2, y2, batch.real, ones, config.lambda_l1,
                                               &g_y2_l1, &g_logits2);
    rec.g2_adv = gl2.adv;
    rec.g2_l1 = gl2.l1;
    auto [gx2_unused, g_y2_adv] = state.d2.backward(g_logits2);
    state.g2.backward(add(g_y2_adv, g_y2_l1));
    {
        std::vector<nn::ParamRef> params;
        state.g2.collect("g2", params);
        opts.g2.step(params);
    }

    require_finite(rec);
    state.step = rec.step;
    return rec;
}

// ---------------------------------------------------------------------------
// Data plumbing

Tensor images_to_net(const std::vector<ImageGrid>& images) {
    if (images.empty()) throw Error("images_to_net: empty batch");
    const int H = images[0].height(), W = images[0].width(), C = images[0].channels();
    Tensor t(int(images.size()), C, H, W);
    for (size_t n = 0; n < images.size(); ++n) {
        if (images[n].height() != H || images[n].width() != W || images[n].channels() != C)
            throw Error("images_to_net: mixed extents in batch");
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    t(int(n), c, y, x) = images[n].at(y, x, c) * 2.f - 1.f;
    }
    return t;
}

Tensor masks_to_tensor(const std::vector<BinaryMask>& masks) {
    if (masks.empty()) throw Error("masks_to_tensor: empty batch");
    const int H = masks[0].height(), W = masks[0].width();
    Tensor t(int(masks.size()), 1, H, W);
    for (size_t n = 0; n < masks.size(); ++n)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) t(int(n), 0, y, x) = float(masks[n].at(y, x));
    return t;
}

ImageGrid net_to_image(const Tensor& t, int index) {
    ImageGrid img(t.h(), t.w(), t.c());
    for (int c = 0; c < t.c(); ++c)
        for (int y = 0; y < t.h(); ++y)
            for (int x = 0; x < t.w(); ++x)
                img.at(y, x, c) = std::clamp((t(index, c, y, x) + 1.f) / 2.f, 0.f, 1.f);
    return img;
}

ImageGrid stylize_semantic(const SemanticSample& sample, uint64_t salt) {
    RngStream rng(RngStream(sample.seed).fork(salt).state());
    const int H = sample.semantic.height(), W = sample.semantic.width();

    float bg_a[3], bg_b[3], ink[3];
    for (int c = 0; c < 3; ++c) {
        bg_a[c] = float(rng.uniform(0.15, 0.85));
        bg_b[c] = float(rng.uniform(0.15, 0.85));
        ink[c] = float(rng.uniform(0.0, 1.0));
    }
    bool horizontal = rng.uniform() < 0.5;

    ImageGrid out(H, W, 3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float t = horizontal ? float(x) / (W - 1) : float(y) / (H - 1);
            float alpha = sample.semantic.at(y, x, 0);  // white ink as blend weight
            for (int c = 0; c < 3; ++c) {
                float bg = bg_a[c] * (1 - t) + bg_b[c] * t;
                out.at(y, x, c) = bg * (1 - alpha) + ink[c] * alpha;
            }
        }

    // 3x3 box blur softens the pasted edges.
    ImageGrid blurred(H, W, 3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                float acc = 0;
                int cnt = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int ny = y + dy, nx = x + dx;
                        if (ny < 0 || nx < 0 || ny >= H || nx >= W) continue;
                        acc += out.at(ny, nx, c);
                        ++cnt;
                    }
                blurred.at(y, x, c) = acc / cnt;
            }
    return blurred;
}

// ---------------------------------------------------------------------------
// Batch sources

namespace {

std::vector<int> epoch_order(int n, uint64_t seed, int epoch) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    RngStream rng(RngStream(seed).fork(0x0E0Cu + uint64_t(epoch)).state());
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    return order;
}

}  // namespace

PairedDiskDataset::PairedDiskDataset(const std::string& dir, int batch_size, uint64_t seed)
    : dir_(dir), batch_size_(batch_size), seed_(seed) {
    if (!fs::is_directory(dir)) throw ConfigError("dataset: not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        const std::string suffix = "_semantic.png";
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            stems_.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(stems_.begin(), stems_.end());
    for (const auto& s : stems_) {
        if (!fs::exists(dir_ + "/" + s + "_real.png"))
            throw ConfigError("dataset: missing " + s + "_real.png");
        if (!fs::exists(dir_ + "/" + s + "_fg.png"))
            throw ConfigError("dataset: missing " + s + "_fg.png");
    }
    if (int(stems_.size()) < batch_size_)
        throw ConfigError("dataset: fewer samples (" + std::to_string(stems_.size()) +
                          ") than one batch (" + std::to_string(batch_size_) + ")");
}

int PairedDiskDataset::batches_per_epoch() const { return int(stems_.size()) / batch_size_; }

TrainBatch PairedDiskDataset::batch(int epoch, int index) {
    auto order = epoch_order(int(stems_.size()), seed_, epoch);
    std::vector<ImageGrid> semantics, reals;
    std::vector<BinaryMask> masks;
    for (int k = 0; k < batch_size_; ++k) {
        const std::string& stem = stems_[order[size_t(index) * batch_size_ + k]];
        ImageGrid sem = read_png(dir_ + "/" + stem + "_semantic.png");
        ImageGrid real = read_png(dir_ + "/" + stem + "_real.png");
        semantics.push_back(sem.channels() == 1 ? replicate_channels(sem) : sem);
        reals.push_back(real.channels() == 1 ? replicate_channels(real) : real);
        masks.push_back(read_png_mask(dir_ + "/" + stem + "_fg.png"));
    }
    return {images_to_net(semantics), images_to_net(reals), masks_to_tensor(masks)};
}

OnTheFlySource::OnTheFlySource(const Corpus& corpus, const FontCatalogue& fonts,
                               const RendererConfig& rcfg, int batch_size, int batches_per_epoch,
                               uint64_t seed)
    : corpus_(corpus),
      fonts_(fonts),
      rcfg_(rcfg),
      batch_size_(batch_size),
      batches_per_epoch_(batches_per_epoch),
      seed_(seed) {
    if (batch_size_ < 1 || batches_per_epoch_ < 1)
        throw ConfigError("on-the-fly source: batch size and batches/epoch must be >= 1");
}

int OnTheFlySource::batches_per_epoch() const { return batches_per_epoch_; }

TrainBatch OnTheFlySource::batch(int epoch, int index) {
    std::vector<ImageGrid> semantics, reals;
    std::vector<BinaryMask> masks;
    for (int k = 0; k < batch_size_; ++k) {
        uint64_t sample_seed =
            seed_ + uint64_t(epoch) * 1000003u + uint64_t(index) * 1009u + uint64_t(k);
        SemanticSample s = synthesize_sample(corpus_, fonts_, rcfg_, sample_seed);
        reals.push_back(stylize_semantic(s, 0x5717u));
        semantics.push_back(std::move(s.semantic));
        masks.push_back(std::move(s.foreground_mask));
    }
    return {images_to_net(semantics), images_to_net(reals), masks_to_tensor(masks)};
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult run_training(BatchSource& data, const TrainConfig& config,
                         const std::string& checkpoint_dir, const std::string& resume_from) {
    config.validate();
    if (data.batches_per_epoch() < 1) throw ConfigError("train: dataset yields no batches");
    fs::create_directories(checkpoint_dir);

    std::unique_ptr<CascadeState> state;
    CascadeOptimizers opts;
    RngStream rng(config.seed);
    int start_epoch = 0;

    if (!resume_from.empty()) {
        nn::CheckpointMeta meta = nn::load_checkpoint(resume_from, state, &opts, config.adam());
        if (!(meta.plan == config.plan))
            throw RuntimeFailure("train: checkpoint plan differs from configured plan");
        rng.set_state(meta.rng_state);
        start_epoch = meta.epoch;
    } else {
        state = std::make_unique<CascadeState>(config.plan);
        state->init(config.seed);
        opts = CascadeOptimizers::create(config.adam(), *state);
    }

    const std::string history_path = checkpoint_dir + "/loss_history.csv";
    bool fresh_history = !fs::exists(history_path) || resume_from.empty();
    std::ofstream history(history_path,
                          fresh_history ? std::ios::trunc : (std::ios::app | std::ios::ate));
    if (!history) throw RuntimeFailure("train: cannot write " + history_path);
    if (fresh_history) history << "step,d1,g1_adv,g1_l1,d2,g2_adv,g2_l1\n";

    TrainResult result;
    auto write_checkpoint = [&](const std::string& name, int next_epoch) {
        nn::CheckpointMeta meta;
        meta.step = state->step;
        meta.epoch = next_epoch;
        meta.rng_state = rng.state();
        meta.plan = config.plan;
        std::string path = checkpoint_dir + "/" + name;
        nn::save_checkpoint(path, *state, &opts, meta);
        return path;
    };

    for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
        for (int b = 0; b < data.batches_per_epoch(); ++b) {
            TrainBatch batch = data.batch(epoch, b);
            LossRecord rec = train_step(*state, opts, batch, config, rng);
            history << rec.step << ',' << rec.d1_loss << ',' << rec.g1_adv << ',' << rec.g1_l1
                    << ',' << rec.d2_loss << ',' << rec.g2_adv << ',' << rec.g2_l1 << '\n';
            result.history.push_back(rec);
        }
        if ((epoch + 1) % config.checkpoint_interval_epochs == 0 && epoch + 1 < config.epochs) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.ckpt", epoch + 1);
            write_checkpoint(name, epoch + 1);
        }
        history.flush();
    }

    result.final_checkpoint = write_checkpoint("checkpoint_final.ckpt", config.epochs);
    result.final_step = state->step;
    return result;
}

}  // namespace train
}  // namespace seqforge
