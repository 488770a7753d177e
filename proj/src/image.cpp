#include "seqforge/image.hpp"

#include <algorithm>
#include <cmath>

namespace seqforge {

bool BinaryMask::bounding_box(int& y0, int& x0, int& y1, int& x1) const {
    y0 = height_;
    x0 = width_;
    y1 = -1;
    x1 = -1;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (at(y, x)) {
                y0 = std::min(y0, y);
                x0 = std::min(x0, x);
                y1 = std::max(y1, y);
                x1 = std::max(x1, x);
            }
        }
    }
    return y1 >= 0;
}

ImageGrid resize_bilinear(const ImageGrid& src, int out_height, int out_width) {
    ImageGrid out(out_height, out_width, src.channels());
    const double sy = double(src.height()) / out_height;
    const double sx = double(src.width()) / out_width;
    for (int y = 0; y < out_height; ++y) {
        // Pixel-center alignment, clamped at borders.
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, src.height() - 1);
        int y1c = std::clamp(y0 + 1, 0, src.height() - 1);
        for (int x = 0; x < out_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, src.width() - 1);
            int x1c = std::clamp(x0 + 1, 0, src.width() - 1);
            for (int c = 0; c < src.channels(); ++c) {
                double top = src.at(y0c, x0c, c) * (1 - wx) + src.at(y0c, x1c, c) * wx;
                double bot = src.at(y1c, x0c, c) * (1 - wx) + src.at(y1c, x1c, c) * wx;
                out.at(y, x, c) = float(top * (1 - wy) + bot * wy);
            }
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& src, int out_height, int out_width) {
    BinaryMask out(out_height, out_width);
    const double sy = double(src.height()) / out_height;
    const double sx = double(src.width()) / out_width;
    for (int y = 0; y < out_height; ++y) {
        int ys = std::clamp(int((y + 0.5) * sy), 0, src.height() - 1);
        for (int x = 0; x < out_width; ++x) {
            int xs = std::clamp(int((x + 0.5) * sx), 0, src.width() - 1);
            out.at(y, x) = src.at(ys, xs);
        }
    }
    return out;
}

void letterbox(const ImageGrid& img, const BinaryMask& mask, int out_height, int out_width,
               ImageGrid& out_img, BinaryMask& out_mask) {
    if (img.height() != mask.height() || img.width() != mask.width())
        throw Error("letterbox: image/mask extent mismatch");
    double scale = std::min(double(out_width) / img.width(), double(out_height) / img.height());
    int w = std::max(1, int(std::lround(img.width() * scale)));
    int h = std::max(1, int(std::lround(img.height() * scale)));
    w = std::min(w, out_width);
    h = std::min(h, out_height);
    ImageGrid scaled = resize_bilinear(img, h, w);
    BinaryMask scaled_mask = resize_nearest(mask, h, w);
    out_img = ImageGrid(out_height, out_width, img.channels(), 0.f);
    out_mask = BinaryMask(out_height, out_width);
    int oy = (out_height - h) / 2;
    int ox = (out_width - w) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < img.channels(); ++c)
                out_img.at(oy + y, ox + x, c) = scaled.at(y, x, c);
            out_mask.at(oy + y, ox + x) = scaled_mask.at(y, x);
        }
    }
}

ImageGrid replicate_channels(const ImageGrid& gray) {
    if (gray.channels() != 1) throw Error("replicate_channels: expects 1 channel");
    ImageGrid out(gray.height(), gray.width(), 3);
    for (int y = 0; y < gray.height(); ++y)
        for (int x = 0; x < gray.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = gray.at(y, x, 0);
    return out;
}

ImageGrid to_grayscale(const ImageGrid& rgb) {
    if (rgb.channels() != 3) throw Error("to_grayscale: expects 3 channels");
    ImageGrid out(rgb.height(), rgb.width(), 1);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out.at(y, x, 0) = float(0.299 * rgb.at(y, x, 0) + 0.587 * rgb.at(y, x, 1) +
                                    0.114 * rgb.at(y, x, 2));
    return out;
}

uint8_t quantize_unit(float v) {
    float scaled = std::clamp(v, 0.f, 1.f) * 255.f;
    int q = int(std::floor(scaled + 0.5f));
    return uint8_t(std::clamp(q, 0, 255));
}

uint8_t quantize_net_range(float v) {
    float scaled = (std::clamp(v, -1.f, 1.f) + 1.f) * 127.5f;
    int q = int(std::floor(scaled + 0.5f));
    return uint8_t(std::clamp(q, 0, 255));
}

}  // namespace seqforge
