#include "seqforge/renderer.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "seqforge/error.hpp"
#include "seqforge/morphology.hpp"
#include "seqforge/poisson.hpp"

namespace seqforge {

bool accept_sample(const std::string& text, const BinaryMask& glyph_mask) {
    bool has_content = false;
    for (unsigned char c : text) {
        if (std::isspace(c) || std::ispunct(c)) continue;
        has_content = true;
        break;
    }
    if (!has_content) return false;

    int y0, x0, y1, x1;
    if (!glyph_mask.bounding_box(y0, x0, y1, x1)) return false;  // no ink at all
    const int height = y1 - y0 + 1, width = x1 - x0 + 1;
    return height <= width;
}

namespace {

// Paragraph samples keep at most `max_lines` lines of text.
std::string clip_lines(const std::string& text, int max_lines) {
    int count = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        if (++count == max_lines) break;
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) return text;
        pos = nl + 1;
    }
    size_t nl = text.find('\n', pos);
    return nl == std::string::npos ? text : text.substr(0, nl);
}

void crop(const ImageGrid& img, const BinaryMask& mask, int y0, int x0, int y1, int x1,
          ImageGrid& out_img, BinaryMask& out_mask) {
    out_img = ImageGrid(y1 - y0 + 1, x1 - x0 + 1, img.channels());
    out_mask = BinaryMask(y1 - y0 + 1, x1 - x0 + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            for (int c = 0; c < img.channels(); ++c)
                out_img.at(y - y0, x - x0, c) = img.at(y, x, c);
            out_mask.at(y - y0, x - x0) = mask.at(y, x);
        }
}

}  // namespace

SemanticSample synthesize_sample(const Corpus& corpus, const FontCatalogue& fonts,
                                 const RendererConfig& config, uint64_t seed) {
    if (fonts.size() < 1) throw ConfigError("synthesize_sample: empty font catalogue");
    RngStream rng(seed);

    SemanticSample sample;
    sample.seed = seed;

    ImageGrid ink;      // 1 channel working raster
    BinaryMask mask;
    TextUnitMode mode = config.mode;
    bool accepted = false;
    for (int attempt = 0; attempt < config.max_rejections; ++attempt) {
        if (config.mixed_modes) {
            static constexpr TextUnitMode kModes[3] = {TextUnitMode::kWord, TextUnitMode::kLine,
                                                       TextUnitMode::kParagraph};
            mode = kModes[rng.uniform_int(3)];
            if (corpus.unit_count(mode) == 0) mode = TextUnitMode::kWord;
        }
        std::string text = corpus.sample(mode, rng);
        if (mode == TextUnitMode::kParagraph)
            text = clip_lines(text, config.max_paragraph_lines);
        int font_id = rng.uniform_int(fonts.size());

        // Punctuation-only text never rasterizes to an accepted sample; skip
        // the render for it.
        bool printable = false;
        for (unsigned char c : text)
            if (!std::isspace(c) && !std::ispunct(c)) {
                printable = true;
                break;
            }
        if (!printable) continue;

        RasterizedText raster =
            rasterize_text(text, fonts.entry(font_id), config.target_text_height);

        if (mode == TextUnitMode::kParagraph && raster.lines.size() > 1) {
            // Crop to the first line's ink extent; the label is what stays
            // visible.
            const auto& box = raster.lines[0];
            if (box.y1 < box.y0) continue;
            int y0 = std::max(0, box.y0 - 1), x0 = std::max(0, box.x0 - 1);
            int y1 = std::min(raster.image.height() - 1, box.y1 + 1);
            int x1 = std::min(raster.image.width() - 1, box.x1 + 1);
            ImageGrid cropped_img;
            BinaryMask cropped_mask;
            crop(raster.image, raster.mask, y0, x0, y1, x1, cropped_img, cropped_mask);
            raster.image = std::move(cropped_img);
            raster.mask = std::move(cropped_mask);
            text = box.text;
        }

        if (!accept_sample(text, raster.mask)) continue;

        sample.text = text;
        sample.font_id = font_id;
        sample.substituted = raster.substituted;
        ink = std::move(raster.image);
        mask = std::move(raster.mask);
        accepted = true;
        break;
    }
    if (!accepted)
        throw ConfigError("synthesize_sample: " + std::to_string(config.max_rejections) +
                          " consecutive rejections; corpus/filter mismatch");

    ImageGrid warped;
    BinaryMask warped_mask;
    sample.transform =
        apply_sampled_transform(ink, mask, config.transform, rng, warped, warped_mask);

    ImageGrid fitted;
    BinaryMask fitted_mask;
    letterbox(warped, warped_mask, config.image_height, config.image_width, fitted, fitted_mask);

    ImageGrid source = replicate_channels(fitted);
    ImageGrid black(config.image_height, config.image_width, 3, 0.f);
    sample.semantic = poisson_blend(source, black, fitted_mask, config.poisson_tol,
                                    config.poisson_max_iterations);
    sample.glyph_mask = fitted_mask;
    sample.foreground_mask =
        dilate(fitted_mask, config.dilation_radius, config.dilation_iterations);
    return sample;
}

std::string sample_record_json(const SemanticSample& sample) {
    nlohmann::json rec;
    rec["text"] = sample.text;
    rec["font_id"] = sample.font_id;
    rec["seed"] = sample.seed;
    rec["transform"] = {
        {"rotation_deg", sample.transform.rotation_deg},
        {"shear", sample.transform.shear},
        {"scale", sample.transform.scale},
        {"perspective",
         {{sample.transform.perspective[0][0], sample.transform.perspective[0][1]},
          {sample.transform.perspective[1][0], sample.transform.perspective[1][1]},
          {sample.transform.perspective[2][0], sample.transform.perspective[2][1]},
          {sample.transform.perspective[3][0], sample.transform.perspective[3][1]}}},
    };
    rec["substituted"] = sample.substituted;
    return rec.dump();
}

}  // namespace seqforge
