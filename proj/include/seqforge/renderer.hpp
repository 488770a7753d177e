#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/corpus.hpp"
#include "seqforge/font.hpp"
#include "seqforge/image.hpp"
#include "seqforge/transform.hpp"

namespace seqforge {

struct RendererConfig {
    int image_width = 128;
    int image_height = 64;
    TextUnitMode mode = TextUnitMode::kWord;
    bool mixed_modes = false;  // draw the granularity per sample
    int target_text_height = 40;
    TransformConfig transform;
    int dilation_radius = 4;  // max(2, image_height/16)
    int dilation_iterations = 1;
    int max_paragraph_lines = 3;
    double poisson_tol = 1e-5;
    int poisson_max_iterations = 10000;
    int max_rejections = 100;
};

// One synthesized semantic training input plus its provenance.
struct SemanticSample {
    ImageGrid semantic;        // 3 channels, [0,1]
    std::string text;
    BinaryMask glyph_mask;
    BinaryMask foreground_mask;  // dilated glyph mask, superset of glyph_mask
    int font_id = 0;
    TransformParams transform;
    uint64_t seed = 0;
    std::vector<uint32_t> substituted;  // codepoints drawn from the fallback face
};

// Curation filter: rejects text that is only punctuation/whitespace and ink
// whose bounding box is taller than wide.
bool accept_sample(const std::string& text, const BinaryMask& glyph_mask);

// Full pipeline: sample text -> rasterize -> accept (resampling up to
// config.max_rejections) -> random projective transform -> letterbox to the
// target extents -> Poisson-blend onto black -> dilate the glyph mask into
// the foreground mask. Deterministic function of (corpus, fonts, config,
// seed).
SemanticSample synthesize_sample(const Corpus& corpus, const FontCatalogue& fonts,
                                 const RendererConfig& config, uint64_t seed);

// Per-sample JSON provenance record (one document per sample on disk).
std::string sample_record_json(const SemanticSample& sample);

}  // namespace seqforge
