#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/font.hpp"

namespace seqforge {

// Minimal TrueType loader and rasterizer: sfnt container (plain or ttcf),
// cmap formats 4/12, glyf outlines including composite glyphs, hmtx metrics.
// CFF-flavoured OpenType ('OTTO') is rejected. Outlines are flattened to
// polylines and filled with a non-zero-winding scanline at 4 sub-rows per
// pixel with analytic horizontal coverage.
class TrueTypeFont : public FontFace {
public:
    static std::shared_ptr<TrueTypeFont> load(const std::string& path);

    std::string family_name() const override { return family_; }
    bool has_glyph(uint32_t codepoint) const override;
    GlyphBitmap rasterize_glyph(uint32_t codepoint, float pixels_per_em) const override;
    double cap_height_em() const override { return cap_height_em_; }
    double ascent_em() const override { return ascent_em_; }
    double descent_em() const override { return descent_em_; }
    double line_gap_em() const override { return line_gap_em_; }

private:
    TrueTypeFont() = default;
    void parse(const std::string& path);

    struct Table {
        uint32_t offset = 0, length = 0;
    };
    Table find_table(uint32_t tag) const;

    uint32_t glyph_index(uint32_t codepoint) const;
    uint32_t glyf_range(uint32_t gid, uint32_t& length) const;
    float advance_units(uint32_t gid) const;

    struct Point {
        float x, y;
        bool on_curve;
    };
    struct Outline {
        std::vector<std::vector<Point>> contours;  // font units
    };
    void append_glyph_outline(uint32_t gid, Outline& out, float xx, float xy, float yx, float yy,
                              float dx, float dy, int depth) const;

    std::vector<uint8_t> data_;
    uint32_t sfnt_base_ = 0;
    Table cmap_{}, loca_{}, glyf_{}, hmtx_{};
    uint32_t cmap_sub_offset_ = 0;
    uint16_t cmap_format_ = 0;
    uint16_t units_per_em_ = 1000;
    int16_t index_to_loc_format_ = 0;
    uint16_t num_glyphs_ = 0;
    uint16_t num_h_metrics_ = 0;
    std::string family_;
    double cap_height_em_ = 0.7, ascent_em_ = 0.8, descent_em_ = 0.2, line_gap_em_ = 0.0;
};

}  // namespace seqforge
