#include "seqforge/font.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "seqforge/error.hpp"
#include "seqforge/truetype.hpp"

namespace seqforge {

namespace fs = std::filesystem;

std::vector<uint32_t> decode_utf8(const std::string& text) {
    std::vector<uint32_t> out;
    size_t i = 0;
    while (i < text.size()) {
        uint8_t b = text[i];
        uint32_t cp = 0xFFFD;
        size_t len = 1;
        if (b < 0x80) {
            cp = b;
        } else if ((b & 0xE0) == 0xC0 && i + 1 < text.size() &&
                   (text[i + 1] & 0xC0) == 0x80) {
            cp = (uint32_t(b & 0x1F) << 6) | (text[i + 1] & 0x3F);
            len = 2;
        } else if ((b & 0xF0) == 0xE0 && i + 2 < text.size() &&
                   (text[i + 1] & 0xC0) == 0x80 && (text[i + 2] & 0xC0) == 0x80) {
            cp = (uint32_t(b & 0x0F) << 12) | (uint32_t(text[i + 1] & 0x3F) << 6) |
                 (text[i + 2] & 0x3F);
            len = 3;
        } else if ((b & 0xF8) == 0xF0 && i + 3 < text.size() &&
                   (text[i + 1] & 0xC0) == 0x80 && (text[i + 2] & 0xC0) == 0x80 &&
                   (text[i + 3] & 0xC0) == 0x80) {
            cp = (uint32_t(b & 0x07) << 18) | (uint32_t(text[i + 1] & 0x3F) << 12) |
                 (uint32_t(text[i + 2] & 0x3F) << 6) | (text[i + 3] & 0x3F);
            len = 4;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

FontCatalogue FontCatalogue::builtin_only() {
    FontCatalogue cat;
    cat.entries_.push_back(
        {0, "", BuiltinFont::instance().family_name(),
         std::shared_ptr<const FontFace>(&BuiltinFont::instance(), [](const FontFace*) {})});
    return cat;
}

FontCatalogue FontCatalogue::from_directory(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("font catalogue: not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        if (ext == ".ttf" || ext == ".otf" || ext == ".ttc") paths.push_back(e.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ConfigError("font catalogue: no font files in " + dir);

    FontCatalogue cat;
    int id = 0;
    for (const auto& p : paths) {
        auto face = TrueTypeFont::load(p);
        // Catalogue invariant: every entry covers the printable ASCII set.
        for (uint32_t cp = 0x21; cp <= 0x7E; ++cp)
            if (!face->has_glyph(cp))
                throw ConfigError("font catalogue: " + p + " lacks ASCII glyph " +
                                  std::to_string(cp));
        cat.entries_.push_back({id++, p, face->family_name(), face});
    }
    return cat;
}

const FontEntry& FontCatalogue::entry(int id) const {
    if (id < 0 || id >= size())
        throw Error("font catalogue: id " + std::to_string(id) + " out of range");
    return entries_[id];
}

RasterizedText rasterize_text(const std::string& text, const FontEntry& font, int target_height) {
    if (target_height < 1) throw Error("rasterize_text: target_height must be >= 1");
    const FontFace& face = *font.face;
    const FontFace& fallback = BuiltinFont::instance();

    RasterizedText out;
    const float ppem = float(target_height / std::max(0.05, face.cap_height_em()));
    const float line_height =
        ppem * float(face.ascent_em() + face.descent_em() + face.line_gap_em());
    const float base0 = ppem * float(face.ascent_em());

    struct Placement {
        const GlyphBitmap* glyph;
        float pen_x;
        int line;
    };
    std::map<uint32_t, GlyphBitmap> cache;       // per-call glyph caches
    std::map<uint32_t, GlyphBitmap> fb_cache;
    std::vector<Placement> placements;

    std::vector<std::string> lines;
    {
        size_t start = 0;
        while (true) {
            size_t nl = text.find('\n', start);
            if (nl == std::string::npos) {
                lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }

    float space_advance = 0.f;
    if (face.has_glyph(' '))
        space_advance = face.rasterize_glyph(' ', ppem).advance;
    if (space_advance <= 0) space_advance = 0.33f * ppem;

    for (int li = 0; li < int(lines.size()); ++li) {
        float pen = 0.f;
        for (uint32_t cp : decode_utf8(lines[li])) {
            if (cp == ' ' || cp == '\t') {
                pen += space_advance * (cp == '\t' ? 4 : 1);
                continue;
            }
            if (cp < 0x20) continue;
            const GlyphBitmap* glyph = nullptr;
            if (face.has_glyph(cp)) {
                auto it = cache.find(cp);
                if (it == cache.end())
                    it = cache.emplace(cp, face.rasterize_glyph(cp, ppem)).first;
                glyph = &it->second;
            } else {
                uint32_t sub = fallback.has_glyph(cp) ? cp : uint32_t('?');
                out.substituted.push_back(cp);
                auto it = fb_cache.find(sub);
                if (it == fb_cache.end())
                    it = fb_cache.emplace(sub, fallback.rasterize_glyph(sub, ppem)).first;
                glyph = &it->second;
            }
            placements.push_back({glyph, pen, li});
            pen += glyph->advance;
        }
    }

    // Measure pass over glyph boxes.
    const float kBig = 1e30f;
    float min_x = kBig, min_y = kBig, max_x = -kBig, max_y = -kBig;
    for (const auto& p : placements) {
        if (p.glyph->blank()) continue;
        float gx0 = p.pen_x + p.glyph->bearing_x;
        float gy0 = base0 + p.line * line_height - p.glyph->bearing_y;
        min_x = std::min(min_x, gx0);
        min_y = std::min(min_y, gy0);
        max_x = std::max(max_x, gx0 + p.glyph->width);
        max_y = std::max(max_y, gy0 + p.glyph->height);
    }
    if (max_x <= min_x)
        throw Error("rasterize_text: text produced no ink: '" + text + "'");

    const int margin = 2;
    int width = int(std::ceil(max_x - min_x)) + 2 * margin;
    int height = int(std::ceil(max_y - min_y)) + 2 * margin;
    out.image = ImageGrid(height, width, 1, 0.f);

    out.lines.resize(lines.size());
    for (size_t li = 0; li < lines.size(); ++li) {
        out.lines[li].text = lines[li];
        out.lines[li].y0 = height;
        out.lines[li].x0 = width;
    }

    for (const auto& p : placements) {
        if (p.glyph->blank()) continue;
        int gx = int(std::lround(p.pen_x + p.glyph->bearing_x - min_x)) + margin;
        int gy = int(std::lround(base0 + p.line * line_height - p.glyph->bearing_y - min_y)) +
                 margin;
        auto& box = out.lines[p.line];
        for (int y = 0; y < p.glyph->height; ++y) {
            int ty = gy + y;
            if (ty < 0 || ty >= height) continue;
            for (int x = 0; x < p.glyph->width; ++x) {
                int tx = gx + x;
                if (tx < 0 || tx >= width) continue;
                float cov = p.glyph->coverage[size_t(y) * p.glyph->width + x];
                if (cov <= 0.f) continue;
                float& dst = out.image.at(ty, tx, 0);
                dst = std::max(dst, cov);
                box.y0 = std::min(box.y0, ty);
                box.x0 = std::min(box.x0, tx);
                box.y1 = std::max(box.y1, ty);
                box.x1 = std::max(box.x1, tx);
            }
        }
    }

    out.mask = BinaryMask(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.mask.at(y, x) = out.image.at(y, x, 0) > 0.5f ? 1 : 0;
    return out;
}

}  // namespace seqforge
