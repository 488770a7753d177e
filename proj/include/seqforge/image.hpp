#pragma once

#include <cstdint>
#include <vector>

#include "seqforge/error.hpp"

namespace seqforge {

// Real-valued H x W x C raster, interleaved row-major.
//
// On-disk files hold 8-bit values in [0,255]; in memory the rendering code
// works in [0,1] and the network code in [-1,1]. Every function taking an
// ImageGrid documents which range it expects.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int height, int width, int channels, float fill = 0.f)
        : height_(height), width_(width), channels_(channels),
          data_(size_t(height) * width * channels, fill) {
        if (height < 1 || width < 1 || (channels != 1 && channels != 3))
            throw Error("ImageGrid: invalid extents " + std::to_string(height) + "x" +
                        std::to_string(width) + "x" + std::to_string(channels));
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float& at(int y, int x, int c) { return data_[(size_t(y) * width_ + x) * channels_ + c]; }
    float at(int y, int x, int c) const { return data_[(size_t(y) * width_ + x) * channels_ + c]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    size_t size() const { return data_.size(); }

    bool same_extents(const ImageGrid& o) const {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

private:
    int height_ = 0, width_ = 0, channels_ = 0;
    std::vector<float> data_;
};

// Binary mask with values in {0,1}, same extents as the image it annotates.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, uint8_t fill = 0)
        : height_(height), width_(width), data_(size_t(height) * width, fill ? 1 : 0) {
        if (height < 1 || width < 1)
            throw Error("BinaryMask: invalid extents");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return data_.empty(); }

    uint8_t& at(int y, int x) { return data_[size_t(y) * width_ + x]; }
    uint8_t at(int y, int x) const { return data_[size_t(y) * width_ + x]; }

    uint8_t* data() { return data_.data(); }
    const uint8_t* data() const { return data_.data(); }
    size_t size() const { return data_.size(); }

    size_t count() const {
        size_t n = 0;
        for (uint8_t v : data_) n += v;
        return n;
    }

    // Tight bounding box of set pixels; returns false when the mask is empty.
    bool bounding_box(int& y0, int& x0, int& y1, int& x1) const;

    bool operator==(const BinaryMask& o) const {
        return height_ == o.height_ && width_ == o.width_ && data_ == o.data_;
    }

private:
    int height_ = 0, width_ = 0;
    std::vector<uint8_t> data_;
};

// Bilinear resize; expects and returns values in the input's range.
ImageGrid resize_bilinear(const ImageGrid& src, int out_height, int out_width);

// Nearest-neighbour resize keeps masks binary.
BinaryMask resize_nearest(const BinaryMask& src, int out_height, int out_width);

// Scales to fit inside out_height x out_width preserving aspect ratio and
// pads with `pad_value` (black); mask is letterboxed with the same geometry.
void letterbox(const ImageGrid& img, const BinaryMask& mask, int out_height, int out_width,
               ImageGrid& out_img, BinaryMask& out_mask);

// 1-channel -> 3-channel replication.
ImageGrid replicate_channels(const ImageGrid& gray);

// ITU-R 601 luma conversion (0.299/0.587/0.114) of a 3-channel image.
ImageGrid to_grayscale(const ImageGrid& rgb);

// [0,1] float -> 8-bit with round-half-up.
uint8_t quantize_unit(float v);

// Network range [-1,1] -> 8-bit with round-half-up (1.0 -> 255, 0.0 -> 128).
uint8_t quantize_net_range(float v);

}  // namespace seqforge
