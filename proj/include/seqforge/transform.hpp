#pragma once

#include <array>

#include "seqforge/image.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

struct TransformParams {
    float rotation_deg = 0.f;
    float shear = 0.f;
    float scale = 1.f;
    // Per-corner (dx,dy) jitter in pixels, order TL,TR,BR,BL.
    std::array<std::array<float, 2>, 4> perspective{{{0, 0}, {0, 0}, {0, 0}, {0, 0}}};

    static TransformParams identity() { return {}; }
};

struct TransformConfig {
    float rotation_max_deg = 15.f;
    float shear_max = 0.3f;
    float scale_min = 0.8f;
    float scale_max = 1.2f;
    float perspective_max_px = 6.f;
};

TransformParams sample_transform(const TransformConfig& cfg, RngStream& rng);

// Warps image and mask by the same projective map built from `params`
// (rotation/shear/scale about the centre, then corner jitter); the output
// canvas is grown so nothing is clipped. The mask is re-binarized at 0.5.
// Throws RuntimeFailure when the homography is degenerate.
void apply_random_transform(const ImageGrid& image, const BinaryMask& mask,
                            const TransformParams& params, ImageGrid& out_image,
                            BinaryMask& out_mask);

// Convenience wrapper: samples params, retrying degenerate draws up to 5
// times. Returns the params actually applied.
TransformParams apply_sampled_transform(const ImageGrid& image, const BinaryMask& mask,
                                        const TransformConfig& cfg, RngStream& rng,
                                        ImageGrid& out_image, BinaryMask& out_mask);

}  // namespace seqforge
