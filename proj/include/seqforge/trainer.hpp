#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "seqforge/checkpoint.hpp"
#include "seqforge/image.hpp"
#include "seqforge/losses.hpp"
#include "seqforge/renderer.hpp"

namespace seqforge {
namespace train {

using nn::CascadeOptimizers;
using nn::CascadeState;
using nn::Tensor;

struct TrainConfig {
    double lambda_l1 = 100.0;
    double learning_rate = 0.0002;
    int batch_size = 64;
    int epochs = 200;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    uint64_t seed = 0;
    int checkpoint_interval_epochs = 10;
    nn::CascadePlan plan;

    nn::AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, 1e-8}; }
    void validate() const;
};

struct TrainBatch {
    Tensor semantic;    // (N,3,H,W) in [-1,1]
    Tensor real;        // (N,3,H,W) in [-1,1]
    Tensor foreground;  // (N,1,H,W) in {0,1}
};

struct LossRecord {
    int64_t step = 0;
    double d1_loss = 0, g1_adv = 0, g1_l1 = 0;
    double d2_loss = 0, g2_adv = 0, g2_l1 = 0;
    int empty_mask_batches = 0;  // degenerate all-zero foreground warnings
};

// One full update round: D1 on (x, masked real) vs (x, y1); G1 with the
// foreground-masked L1; D2 on (x, real) vs (x, y2); G2 with the full-image
// L1. y1 enters stage 2 without gradient. Losses are the pre-update values.
LossRecord train_step(CascadeState& state, CascadeOptimizers& opts, const TrainBatch& batch,
                      const TrainConfig& config, RngStream& rng);

// Deterministic ordered batch stream; `batch` must return the same tensors
// for the same (epoch, index) every time it is asked.
class BatchSource {
public:
    virtual ~BatchSource() = default;
    virtual int batches_per_epoch() const = 0;
    virtual TrainBatch batch(int epoch, int index) = 0;
};

// Directory of paired crops: NNN_semantic.png / NNN_real.png / NNN_fg.png.
// Sample order is shuffled per epoch with a seed derived from (seed, epoch).
class PairedDiskDataset : public BatchSource {
public:
    PairedDiskDataset(const std::string& dir, int batch_size, uint64_t seed);
    int batches_per_epoch() const override;
    TrainBatch batch(int epoch, int index) override;
    int sample_count() const { return int(stems_.size()); }

private:
    std::string dir_;
    int batch_size_;
    uint64_t seed_;
    std::vector<std::string> stems_;
};

// Synthesizes (semantic, stylized-real) pairs on demand; the stylization is
// a deterministic procedural stand-in for real photo crops, keyed by the
// sample seed.
class OnTheFlySource : public BatchSource {
public:
    OnTheFlySource(const Corpus& corpus, const FontCatalogue& fonts, const RendererConfig& rcfg,
                   int batch_size, int batches_per_epoch, uint64_t seed);
    int batches_per_epoch() const override;
    TrainBatch batch(int epoch, int index) override;

private:
    const Corpus& corpus_;
    const FontCatalogue& fonts_;
    RendererConfig rcfg_;
    int batch_size_, batches_per_epoch_;
    uint64_t seed_;
};

struct TrainResult {
    std::vector<LossRecord> history;
    std::string final_checkpoint;
    int64_t final_step = 0;
};

// Runs epochs x batches steps, appends the loss history CSV
// (step,d1,g1_adv,g1_l1,d2,g2_adv,g2_l1) under checkpoint_dir, writes a
// checkpoint every `checkpoint_interval_epochs` and at the end, and resumes
// bit-exactly from `resume_from`.
TrainResult run_training(BatchSource& data, const TrainConfig& config,
                         const std::string& checkpoint_dir, const std::string& resume_from = "");

// Data plumbing -------------------------------------------------------------

// [0,1] images -> network range [-1,1], NCHW.
Tensor images_to_net(const std::vector<ImageGrid>& images);
Tensor masks_to_tensor(const std::vector<BinaryMask>& masks);
// Single network image back to [0,1] HWC.
ImageGrid net_to_image(const Tensor& t, int index);

// Procedural "photo" for a semantic sample: seeded background gradient,
// glyph tint, mild blur. Deterministic per (sample, salt).
ImageGrid stylize_semantic(const SemanticSample& sample, uint64_t salt);

}  // namespace train
}  // namespace seqforge
