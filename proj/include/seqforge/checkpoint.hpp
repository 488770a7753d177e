#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "seqforge/adam.hpp"
#include "seqforge/models.hpp"

namespace seqforge {
namespace nn {

// One Adam instance per network, stepped in the update order D1,G1,D2,G2.
struct CascadeOptimizers {
    Adam d1, g1, d2, g2;

    static CascadeOptimizers create(const AdamConfig& config, CascadeState& state);
};

struct CheckpointMeta {
    int64_t step = 0;
    int epoch = 0;
    uint64_t rng_state = 0;
    CascadePlan plan;
};

// Self-describing container: magic + JSON header (plan, step counter, RNG
// state, named tensor directory) + raw little-endian float32 payload holding
// every parameter, normalization buffer and Adam moment.
void save_checkpoint(const std::string& path, CascadeState& state, CascadeOptimizers* opts,
                     const CheckpointMeta& meta);

// Rebuilds the cascade (and optimizer state when `opts` is non-null) from a
// checkpoint; throws RuntimeFailure on malformed files or plan mismatches.
CheckpointMeta load_checkpoint(const std::string& path, std::unique_ptr<CascadeState>& state,
                               CascadeOptimizers* opts, const AdamConfig& adam_config);

}  // namespace nn
}  // namespace seqforge
