#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "seqforge/image.hpp"

namespace seqforge {

// Anti-aliased coverage raster for one glyph, positioned relative to the
// baseline pen position.
struct GlyphBitmap {
    int width = 0, height = 0;
    int bearing_x = 0;        // left edge offset from pen x
    int bearing_y = 0;        // top edge above the baseline
    float advance = 0.f;      // pen advance in pixels
    std::vector<float> coverage;  // row-major, [0,1]

    bool blank() const { return width == 0 || height == 0; }
};

class FontFace {
public:
    virtual ~FontFace() = default;
    virtual std::string family_name() const = 0;
    virtual bool has_glyph(uint32_t codepoint) const = 0;
    // pixels_per_em sets the rendering scale; metrics below are em fractions.
    virtual GlyphBitmap rasterize_glyph(uint32_t codepoint, float pixels_per_em) const = 0;
    virtual double cap_height_em() const = 0;
    virtual double ascent_em() const = 0;
    virtual double descent_em() const = 0;  // positive, below baseline
    virtual double line_gap_em() const = 0;
};

// Embedded 5x7 dot-matrix face covering printable ASCII. Serves as the
// fallback for missing glyphs and as the whole catalogue when no font
// directory is configured, so the pipeline runs without external assets.
class BuiltinFont : public FontFace {
public:
    static const BuiltinFont& instance();

    std::string family_name() const override { return "builtin-5x7"; }
    bool has_glyph(uint32_t codepoint) const override;
    GlyphBitmap rasterize_glyph(uint32_t codepoint, float pixels_per_em) const override;
    double cap_height_em() const override { return 0.7; }
    double ascent_em() const override { return 0.8; }
    double descent_em() const override { return 0.2; }
    double line_gap_em() const override { return 0.1; }
};

struct FontEntry {
    int id = 0;
    std::string path;  // empty for the builtin face
    std::string name;
    std::shared_ptr<const FontFace> face;
};

// Ordered font list; directory catalogues are sorted lexicographically by
// filename so catalogue ids are stable across runs.
class FontCatalogue {
public:
    static FontCatalogue builtin_only();
    // Loads every *.ttf/*.otf in `dir` and validates that each face covers
    // printable ASCII; failures raise ConfigError.
    static FontCatalogue from_directory(const std::string& dir);

    const FontEntry& entry(int id) const;
    int size() const { return int(entries_.size()); }
    const FontFace& fallback() const { return BuiltinFont::instance(); }

private:
    std::vector<FontEntry> entries_;
};

struct RasterizedText {
    ImageGrid image;  // 1 channel, [0,1], white ink on black
    BinaryMask mask;  // coverage > 0.5
    std::vector<uint32_t> substituted;  // codepoints drawn from the fallback face

    struct LineBox {
        int y0 = 0, x0 = 0, y1 = -1, x1 = -1;  // ink bbox, inclusive; y1<y0 when blank
        std::string text;
    };
    std::vector<LineBox> lines;
};

// Renders `text` (may contain newlines) as white glyphs on black, scaled so
// capital-letter ink height lands on target_height pixels. Missing glyphs are
// substituted from the builtin face and recorded.
RasterizedText rasterize_text(const std::string& text, const FontEntry& font, int target_height);

std::vector<uint32_t> decode_utf8(const std::string& text);

}  // namespace seqforge
