#include "seqforge/truetype.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "seqforge/error.hpp"

namespace seqforge {

namespace {

constexpr uint32_t tag4(char a, char b, char c, char d) {
    return (uint32_t(uint8_t(a)) << 24) | (uint32_t(uint8_t(b)) << 16) |
           (uint32_t(uint8_t(c)) << 8) | uint32_t(uint8_t(d));
}

// Big-endian reader with bounds checks; truncated tables raise ConfigError.
struct Reader {
    const uint8_t* data;
    size_t size;

    uint8_t u8(size_t off) const {
        require(off, 1);
        return data[off];
    }
    uint16_t u16(size_t off) const {
        require(off, 2);
        return uint16_t(data[off]) << 8 | data[off + 1];
    }
    int16_t i16(size_t off) const { return int16_t(u16(off)); }
    uint32_t u32(size_t off) const {
        require(off, 4);
        return uint32_t(u16(off)) << 16 | u16(off + 2);
    }
    void require(size_t off, size_t n) const {
        if (off + n > size) throw ConfigError("truetype: truncated font table");
    }
};

struct Edge {
    float x0, y0, x1, y1;  // bitmap space, y down, y0 < y1
    int dir;               // +1 when the original segment pointed downward
};

void add_edge(std::vector<Edge>& edges, float x0, float y0, float x1, float y1) {
    if (y0 == y1) return;
    if (y0 < y1)
        edges.push_back({x0, y0, x1, y1, +1});
    else
        edges.push_back({x1, y1, x0, y0, -1});
}

void flatten_quadratic(std::vector<Edge>& edges, float x0, float y0, float cx, float cy, float x1,
                       float y1) {
    float net = std::hypot(cx - x0, cy - y0) + std::hypot(x1 - cx, y1 - cy);
    int n = std::clamp(int(std::ceil(net / 3.f)), 2, 32);
    float px = x0, py = y0;
    for (int i = 1; i <= n; ++i) {
        float t = float(i) / n, u = 1.f - t;
        float qx = u * u * x0 + 2 * u * t * cx + t * t * x1;
        float qy = u * u * y0 + 2 * u * t * cy + t * t * y1;
        add_edge(edges, px, py, qx, qy);
        px = qx;
        py = qy;
    }
}

}  // namespace

std::shared_ptr<TrueTypeFont> TrueTypeFont::load(const std::string& path) {
    auto font = std::shared_ptr<TrueTypeFont>(new TrueTypeFont());
    font->parse(path);
    return font;
}

TrueTypeFont::Table TrueTypeFont::find_table(uint32_t tag) const {
    Reader r{data_.data(), data_.size()};
    uint16_t num_tables = r.u16(sfnt_base_ + 4);
    for (uint16_t i = 0; i < num_tables; ++i) {
        size_t rec = sfnt_base_ + 12 + size_t(i) * 16;
        if (r.u32(rec) == tag) return {r.u32(rec + 8), r.u32(rec + 12)};
    }
    return {};
}

void TrueTypeFont::parse(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("truetype: cannot open " + path);
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    Reader r{data_.data(), data_.size()};

    uint32_t version = r.u32(0);
    if (version == tag4('t', 't', 'c', 'f')) {
        if (r.u32(8) < 1) throw ConfigError("truetype: empty collection " + path);
        sfnt_base_ = r.u32(12);
        version = r.u32(sfnt_base_);
    }
    if (version == tag4('O', 'T', 'T', 'O'))
        throw ConfigError("truetype: CFF outlines not supported (" + path + ")");
    if (version != 0x00010000 && version != tag4('t', 'r', 'u', 'e'))
        throw ConfigError("truetype: not a TrueType font (" + path + ")");

    Table head = find_table(tag4('h', 'e', 'a', 'd'));
    Table maxp = find_table(tag4('m', 'a', 'x', 'p'));
    Table hhea = find_table(tag4('h', 'h', 'e', 'a'));
    cmap_ = find_table(tag4('c', 'm', 'a', 'p'));
    loca_ = find_table(tag4('l', 'o', 'c', 'a'));
    glyf_ = find_table(tag4('g', 'l', 'y', 'f'));
    hmtx_ = find_table(tag4('h', 'm', 't', 'x'));
    if (!head.length || !maxp.length || !hhea.length || !cmap_.length || !loca_.length ||
        !glyf_.length || !hmtx_.length)
        throw ConfigError("truetype: required table missing in " + path);

    units_per_em_ = r.u16(head.offset + 18);
    if (units_per_em_ == 0) throw ConfigError("truetype: unitsPerEm is zero in " + path);
    index_to_loc_format_ = r.i16(head.offset + 50);
    num_glyphs_ = r.u16(maxp.offset + 4);
    num_h_metrics_ = r.u16(hhea.offset + 34);
    double upem = units_per_em_;
    ascent_em_ = r.i16(hhea.offset + 4) / upem;
    descent_em_ = -r.i16(hhea.offset + 6) / upem;  // hhea descender is negative
    line_gap_em_ = r.i16(hhea.offset + 8) / upem;
    if (descent_em_ < 0) descent_em_ = 0;

    // Preferred cmap subtables: (3,10) format 12, then (3,1) format 4, then
    // any Unicode platform-0 subtable.
    uint16_t n_sub = r.u16(cmap_.offset + 2);
    int best_score = -1;
    for (uint16_t i = 0; i < n_sub; ++i) {
        size_t rec = cmap_.offset + 4 + size_t(i) * 8;
        uint16_t platform = r.u16(rec), encoding = r.u16(rec + 2);
        uint32_t sub = cmap_.offset + r.u32(rec + 4);
        uint16_t format = r.u16(sub);
        if (format != 4 && format != 12) continue;
        int score = 0;
        if (platform == 3 && encoding == 10) score = 4;
        else if (platform == 3 && encoding == 1) score = 3;
        else if (platform == 0) score = 2;
        else score = 1;
        if (format == 12) score += 1;
        if (score > best_score) {
            best_score = score;
            cmap_sub_offset_ = sub;
            cmap_format_ = format;
        }
    }
    if (best_score < 0)
        throw ConfigError("truetype: no usable cmap subtable in " + path);

    Table os2 = find_table(tag4('O', 'S', '/', '2'));
    if (os2.length >= 90 && r.u16(os2.offset) >= 2) {
        int16_t cap = r.i16(os2.offset + 88);
        if (cap > 0) cap_height_em_ = cap / upem;
    } else {
        uint32_t gid = glyph_index('H');
        if (gid) {
            uint32_t len = 0;
            uint32_t off = glyf_range(gid, len);
            if (len >= 10) cap_height_em_ = r.i16(off + 8) / upem;  // glyph yMax
        }
    }
    if (cap_height_em_ < 0.3 || cap_height_em_ > 1.0) cap_height_em_ = 0.7;

    family_ = path;
    size_t slash = family_.find_last_of("/\\");
    if (slash != std::string::npos) family_ = family_.substr(slash + 1);
    Table name = find_table(tag4('n', 'a', 'm', 'e'));
    if (name.length >= 6) {
        uint16_t count = r.u16(name.offset + 2);
        uint32_t strings = name.offset + r.u16(name.offset + 4);
        for (uint16_t i = 0; i < count; ++i) {
            size_t rec = name.offset + 6 + size_t(i) * 12;
            uint16_t platform = r.u16(rec), name_id = r.u16(rec + 6);
            uint16_t length = r.u16(rec + 8), str_off = r.u16(rec + 10);
            if (name_id != 1) continue;
            if (platform == 3) {  // UTF-16BE; keep the ASCII subset
                std::string s;
                for (uint16_t j = 0; j + 1 < length; j += 2) {
                    uint16_t ch = r.u16(strings + str_off + j);
                    if (ch >= 0x20 && ch < 0x7F) s += char(ch);
                }
                if (!s.empty()) {
                    family_ = s;
                    break;
                }
            } else if (platform == 1) {
                std::string s;
                for (uint16_t j = 0; j < length; ++j) {
                    uint8_t ch = r.u8(strings + str_off + j);
                    if (ch >= 0x20 && ch < 0x7F) s += char(ch);
                }
                if (!s.empty()) family_ = s;
            }
        }
    }
}

uint32_t TrueTypeFont::glyph_index(uint32_t cp) const {
    Reader r{data_.data(), data_.size()};
    uint32_t sub = cmap_sub_offset_;
    if (cmap_format_ == 4) {
        if (cp > 0xFFFF) return 0;
        uint16_t seg_count = r.u16(sub + 6) / 2;
        uint32_t end_codes = sub + 14;
        uint32_t start_codes = end_codes + 2u * seg_count + 2;
        uint32_t id_deltas = start_codes + 2u * seg_count;
        uint32_t id_ranges = id_deltas + 2u * seg_count;
        for (uint16_t i = 0; i < seg_count; ++i) {
            if (r.u16(end_codes + 2u * i) < cp) continue;
            uint16_t start = r.u16(start_codes + 2u * i);
            if (start > cp) return 0;
            uint16_t range_offset = r.u16(id_ranges + 2u * i);
            if (range_offset == 0)
                return uint16_t(cp + r.u16(id_deltas + 2u * i));
            uint32_t addr = id_ranges + 2u * i + range_offset + 2u * (cp - start);
            uint16_t gid = r.u16(addr);
            if (gid == 0) return 0;
            return uint16_t(gid + r.u16(id_deltas + 2u * i));
        }
        return 0;
    }
    // format 12
    uint32_t n_groups = r.u32(sub + 12);
    for (uint32_t i = 0; i < n_groups; ++i) {
        size_t g = sub + 16 + size_t(i) * 12;
        uint32_t start = r.u32(g), end = r.u32(g + 4);
        if (cp >= start && cp <= end) return r.u32(g + 8) + (cp - start);
    }
    return 0;
}

bool TrueTypeFont::has_glyph(uint32_t cp) const { return glyph_index(cp) != 0; }

uint32_t TrueTypeFont::glyf_range(uint32_t gid, uint32_t& length) const {
    Reader r{data_.data(), data_.size()};
    if (gid >= num_glyphs_) {
        length = 0;
        return glyf_.offset;
    }
    uint32_t start, end;
    if (index_to_loc_format_ == 0) {
        start = 2u * r.u16(loca_.offset + 2u * gid);
        end = 2u * r.u16(loca_.offset + 2u * (gid + 1));
    } else {
        start = r.u32(loca_.offset + 4u * gid);
        end = r.u32(loca_.offset + 4u * (gid + 1));
    }
    length = end > start ? end - start : 0;
    return glyf_.offset + start;
}

float TrueTypeFont::advance_units(uint32_t gid) const {
    Reader r{data_.data(), data_.size()};
    uint32_t idx = std::min<uint32_t>(gid, num_h_metrics_ ? num_h_metrics_ - 1 : 0);
    return float(r.u16(hmtx_.offset + 4u * idx));
}

void TrueTypeFont::append_glyph_outline(uint32_t gid, Outline& out, float xx, float xy, float yx,
                                        float yy, float dx, float dy, int depth) const {
    if (depth > 8) return;
    uint32_t length = 0;
    uint32_t off = glyf_range(gid, length);
    if (length < 10) return;  // empty glyph
    Reader r{data_.data(), data_.size()};
    int16_t n_contours = r.i16(off);

    if (n_contours >= 0) {
        size_t pos = off + 10;
        std::vector<uint16_t> ends(n_contours);
        for (int i = 0; i < n_contours; ++i) ends[i] = r.u16(pos + 2u * i);
        pos += 2u * n_contours;
        int n_points = n_contours ? ends.back() + 1 : 0;
        uint16_t instr_len = r.u16(pos);
        pos += 2 + instr_len;

        std::vector<uint8_t> flags(n_points);
        for (int i = 0; i < n_points;) {
            uint8_t f = r.u8(pos++);
            flags[i++] = f;
            if (f & 0x08) {  // repeat
                uint8_t times = r.u8(pos++);
                for (uint8_t t = 0; t < times && i < n_points; ++t) flags[i++] = f;
            }
        }
        std::vector<float> xs(n_points), ys(n_points);
        int v = 0;
        for (int i = 0; i < n_points; ++i) {
            uint8_t f = flags[i];
            if (f & 0x02) {
                uint8_t d = r.u8(pos++);
                v += (f & 0x10) ? d : -d;
            } else if (!(f & 0x10)) {
                v += r.i16(pos);
                pos += 2;
            }
            xs[i] = float(v);
        }
        v = 0;
        for (int i = 0; i < n_points; ++i) {
            uint8_t f = flags[i];
            if (f & 0x04) {
                uint8_t d = r.u8(pos++);
                v += (f & 0x20) ? d : -d;
            } else if (!(f & 0x20)) {
                v += r.i16(pos);
                pos += 2;
            }
            ys[i] = float(v);
        }
        int start = 0;
        for (int c = 0; c < n_contours; ++c) {
            int end = ends[c];
            std::vector<Point> contour;
            for (int i = start; i <= end && i < n_points; ++i) {
                float px = xs[i], py = ys[i];
                contour.push_back({xx * px + yx * py + dx, xy * px + yy * py + dy,
                                   bool(flags[i] & 0x01)});
            }
            if (contour.size() >= 2) out.contours.push_back(std::move(contour));
            start = end + 1;
        }
        return;
    }

    // Composite glyph
    size_t pos = off + 10;
    bool more = true;
    while (more) {
        uint16_t flags = r.u16(pos);
        uint16_t component = r.u16(pos + 2);
        pos += 4;
        more = flags & 0x0020;
        float cdx = 0, cdy = 0;
        if (flags & 0x0001) {  // words
            if (flags & 0x0002) {
                cdx = r.i16(pos);
                cdy = r.i16(pos + 2);
            }
            pos += 4;
        } else {
            if (flags & 0x0002) {
                cdx = int8_t(r.u8(pos));
                cdy = int8_t(r.u8(pos + 1));
            }
            pos += 2;
        }
        float cxx = 1, cxy = 0, cyx = 0, cyy = 1;
        if (flags & 0x0008) {
            cxx = cyy = r.i16(pos) / 16384.f;
            pos += 2;
        } else if (flags & 0x0040) {
            cxx = r.i16(pos) / 16384.f;
            cyy = r.i16(pos + 2) / 16384.f;
            pos += 4;
        } else if (flags & 0x0080) {
            cxx = r.i16(pos) / 16384.f;
            cxy = r.i16(pos + 2) / 16384.f;
            cyx = r.i16(pos + 4) / 16384.f;
            cyy = r.i16(pos + 6) / 16384.f;
            pos += 8;
        }
        // Compose child transform with the parent one.
        float nxx = xx * cxx + yx * cxy;
        float nxy = xy * cxx + yy * cxy;
        float nyx = xx * cyx + yx * cyy;
        float nyy = xy * cyx + yy * cyy;
        float ndx = xx * cdx + yx * cdy + dx;
        float ndy = xy * cdx + yy * cdy + dy;
        append_glyph_outline(component, out, nxx, nxy, nyx, nyy, ndx, ndy, depth + 1);
    }
}

GlyphBitmap TrueTypeFont::rasterize_glyph(uint32_t cp, float ppem) const {
    GlyphBitmap g;
    uint32_t gid = glyph_index(cp);
    float scale = ppem / float(units_per_em_);
    g.advance = advance_units(gid) * scale;
    if (gid == 0 && cp != 0) return g;  // caller substitutes

    Outline outline;
    append_glyph_outline(gid, outline, 1, 0, 0, 1, 0, 0, 0);
    if (outline.contours.empty()) return g;  // blank glyph (e.g. space)

    float min_x = 1e30f, min_y = 1e30f, max_x = -1e30f, max_y = -1e30f;
    for (auto& c : outline.contours)
        for (auto& p : c) {
            min_x = std::min(min_x, p.x * scale);
            max_x = std::max(max_x, p.x * scale);
            min_y = std::min(min_y, p.y * scale);
            max_y = std::max(max_y, p.y * scale);
        }
    int origin_x = int(std::floor(min_x));
    int top_y = int(std::ceil(max_y));
    int width = int(std::ceil(max_x)) - origin_x + 1;
    int height = top_y - int(std::floor(min_y)) + 1;
    if (width <= 0 || height <= 0) return g;

    // Bitmap space: bx = x*scale - origin_x, by = top_y - y*scale (y down).
    std::vector<Edge> edges;
    for (auto& contour : outline.contours) {
        const size_t n = contour.size();
        auto bx = [&](const Point& p) { return p.x * scale - origin_x; };
        auto by = [&](const Point& p) { return top_y - p.y * scale; };

        // Walk the contour emitting line/quadratic segments per the implicit
        // on-curve midpoint convention.
        Point start = contour[0];
        if (!start.on_curve) {
            if (contour[n - 1].on_curve)
                start = contour[n - 1];
            else
                start = {(contour[0].x + contour[n - 1].x) / 2,
                         (contour[0].y + contour[n - 1].y) / 2, true};
        }
        Point prev = start;
        Point pending_ctrl{0, 0, false};
        bool have_ctrl = false;
        for (size_t k = 1; k <= n; ++k) {
            const Point& cur = contour[k % n];
            if (cur.on_curve) {
                if (have_ctrl) {
                    flatten_quadratic(edges, bx(prev), by(prev), bx(pending_ctrl),
                                      by(pending_ctrl), bx(cur), by(cur));
                    have_ctrl = false;
                } else {
                    add_edge(edges, bx(prev), by(prev), bx(cur), by(cur));
                }
                prev = cur;
            } else {
                if (have_ctrl) {
                    Point mid{(pending_ctrl.x + cur.x) / 2, (pending_ctrl.y + cur.y) / 2, true};
                    flatten_quadratic(edges, bx(prev), by(prev), bx(pending_ctrl),
                                      by(pending_ctrl), bx(mid), by(mid));
                    prev = mid;
                }
                pending_ctrl = cur;
                have_ctrl = true;
            }
        }
        if (have_ctrl)
            flatten_quadratic(edges, bx(prev), by(prev), bx(pending_ctrl), by(pending_ctrl),
                              bx(start), by(start));
        else if (prev.x != start.x || prev.y != start.y)
            add_edge(edges, bx(prev), by(prev), bx(start), by(start));
    }

    g.width = width;
    g.height = height;
    g.bearing_x = origin_x;
    g.bearing_y = top_y;
    g.coverage.assign(size_t(width) * height, 0.f);

    const int kSubRows = 4;
    std::vector<std::pair<float, int>> crossings;
    for (int row = 0; row < height; ++row) {
        float* out_row = g.coverage.data() + size_t(row) * width;
        for (int s = 0; s < kSubRows; ++s) {
            float y = row + (s + 0.5f) / kSubRows;
            crossings.clear();
            for (const Edge& e : edges) {
                if (y < e.y0 || y >= e.y1) continue;
                float t = (y - e.y0) / (e.y1 - e.y0);
                crossings.emplace_back(e.x0 + t * (e.x1 - e.x0), e.dir);
            }
            std::sort(crossings.begin(), crossings.end());
            int winding = 0;
            for (size_t i = 0; i < crossings.size(); ++i) {
                int prev_w = winding;
                winding += crossings[i].second;
                if (prev_w == 0 && winding != 0 && i + 1 < crossings.size()) {
                    // Find where the winding returns to zero.
                    float xa = crossings[i].first;
                    size_t j = i;
                    int w = winding;
                    while (j + 1 < crossings.size() && w != 0) {
                        ++j;
                        w += crossings[j].second;
                    }
                    float xb = crossings[j].first;
                    winding = w;
                    i = j;
                    xa = std::clamp(xa, 0.f, float(width));
                    xb = std::clamp(xb, 0.f, float(width));
                    for (int px = int(xa); px < width && float(px) < xb; ++px) {
                        float overlap = std::min(float(px + 1), xb) - std::max(float(px), xa);
                        if (overlap > 0) out_row[px] += overlap / kSubRows;
                    }
                }
            }
        }
        for (int px = 0; px < width; ++px) out_row[px] = std::min(out_row[px], 1.f);
    }
    return g;
}

}  // namespace seqforge
