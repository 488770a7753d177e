#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/image.hpp"

namespace seqforge {

// Reads an 8-bit PNG into [0,1] floats. Palette/16-bit/alpha inputs are
// normalized to plain 8-bit gray or RGB.
ImageGrid read_png(const std::string& path);

// Writes [0,1] floats as an 8-bit gray or RGB PNG (round-half-up).
void write_png(const std::string& path, const ImageGrid& img);

// Writes raw interleaved 8-bit rows (channels 1 or 3).
void write_png_u8(const std::string& path, const std::vector<uint8_t>& pixels, int height,
                  int width, int channels);

// Masks are stored as 1-bit grayscale PNGs.
void write_png_mask(const std::string& path, const BinaryMask& mask);
BinaryMask read_png_mask(const std::string& path);

}  // namespace seqforge
