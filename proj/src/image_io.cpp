#include "seqforge/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace seqforge {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

ImageGrid read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw RuntimeFailure("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw RuntimeFailure("read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw RuntimeFailure("read_png: png_create_info_struct failed");
    }
    std::vector<uint8_t> raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw RuntimeFailure("read_png: libpng error while reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE)
        png_set_interlace_handling(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw RuntimeFailure("read_png: unsupported channel count in " + path);
    }

    size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageGrid img(int(height), int(width), channels);
    for (png_uint_32 y = 0; y < height; ++y)
        for (png_uint_32 x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(int(y), int(x), c) = raw[y * rowbytes + x * channels + c] / 255.f;
    return img;
}

void write_png_u8(const std::string& path, const std::vector<uint8_t>& pixels, int height,
                  int width, int channels) {
    if (channels != 1 && channels != 3)
        throw RuntimeFailure("write_png_u8: channels must be 1 or 3");
    if (pixels.size() != size_t(height) * width * channels)
        throw RuntimeFailure("write_png_u8: pixel buffer size mismatch");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw RuntimeFailure("write_png_u8: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw RuntimeFailure("write_png_u8: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw RuntimeFailure("write_png_u8: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw RuntimeFailure("write_png_u8: libpng error while writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(pixels.data() + size_t(y) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png(const std::string& path, const ImageGrid& img) {
    std::vector<uint8_t> pixels(img.size());
    for (size_t i = 0; i < img.size(); ++i) pixels[i] = quantize_unit(img.data()[i]);
    write_png_u8(path, pixels, img.height(), img.width(), img.channels());
}

void write_png_mask(const std::string& path, const BinaryMask& mask) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw RuntimeFailure("write_png_mask: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw RuntimeFailure("write_png_mask: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw RuntimeFailure("write_png_mask: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw RuntimeFailure("write_png_mask: libpng error while writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, mask.width(), mask.height(), 1, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const int rowbytes = (mask.width() + 7) / 8;
    std::vector<uint8_t> packed(size_t(rowbytes) * mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(y, x)) packed[size_t(y) * rowbytes + x / 8] |= uint8_t(0x80 >> (x % 8));
    std::vector<png_bytep> rows(mask.height());
    for (int y = 0; y < mask.height(); ++y) rows[y] = packed.data() + size_t(y) * rowbytes;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

BinaryMask read_png_mask(const std::string& path) {
    ImageGrid img = read_png(path);
    if (img.channels() != 1) throw RuntimeFailure("read_png_mask: mask PNG must be grayscale");
    BinaryMask mask(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) mask.at(y, x) = img.at(y, x, 0) > 0.5f ? 1 : 0;
    return mask;
}

}  // namespace seqforge
