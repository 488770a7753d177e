#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "seqforge/renderer.hpp"
#include "seqforge/trainer.hpp"

namespace seqforge {

// Merged renderer + trainer + model + generation + metrics settings. Every
// field has a default matching the training recipe (lambda 100, lr 0.0002,
// batch 64, 200 epochs, 128x64 images); unknown keys are rejected during
// parsing.
struct RunConfig {
    RendererConfig renderer;
    std::string corpus_path;
    std::string font_dir;

    train::TrainConfig trainer;
    int batches_per_epoch = 16;  // used by on-the-fly training only

    struct Generation {
        bool grayscale = false;
        int batch_size = 32;
    } generation;

    struct Metrics {
        std::string backend = "tiny-convnet-v1";
        int n_splits = 10;
    } metrics;

    static RunConfig defaults();
    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    void validate() const;
};

}  // namespace seqforge
