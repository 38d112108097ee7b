#include "wdt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jpeglib.h>

namespace wdt {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        fail(ErrorCategory::io, std::string("cannot open '") + path.string() + "'");
    return f;
}

// Decoded interleaved rows, 8- or 16-bit, 1..4 channels.
struct Decoded {
    int height = 0, width = 0, channels = 0, bit_depth = 8;
    std::vector<std::uint16_t> pixels;  // h*w*channels
};

Decoded decode_png(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::ingestion, "corrupt PNG: " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Decoded d;
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.channels = static_cast<int>(png_get_channels(png, info));
    d.bit_depth = static_cast<int>(png_get_bit_depth(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(d.height) * stride);
    std::vector<png_bytep> rows(d.height);
    for (int y = 0; y < d.height; ++y) rows[y] = raw.data() + y * stride;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    d.pixels.resize(static_cast<std::size_t>(d.height) * d.width * d.channels);
    if (d.bit_depth == 16) {
        for (std::size_t i = 0; i < d.pixels.size(); ++i)
            d.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < d.pixels.size(); ++i) d.pixels[i] = raw[i];
    }
    return d;
}

Decoded decode_jpeg(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
        jpeg_destroy_decompress(&cinfo);
        fail(ErrorCategory::ingestion, "corrupt JPEG: " + path.string());
    }
    jpeg_start_decompress(&cinfo);
    Decoded d;
    d.height = static_cast<int>(cinfo.output_height);
    d.width = static_cast<int>(cinfo.output_width);
    d.channels = cinfo.output_components;
    d.pixels.resize(static_cast<std::size_t>(d.height) * d.width * d.channels);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(d.width) * d.channels);
    JSAMPROW rowp = row.data();
    for (int y = 0; y < d.height; ++y) {
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (std::size_t i = 0; i < row.size(); ++i)
            d.pixels[static_cast<std::size_t>(y) * row.size() + i] = row[i];
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return d;
}

Decoded decode_any(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char magic[4] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    f.reset();
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P') return decode_png(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return decode_jpeg(path);
    fail(ErrorCategory::ingestion,
         "unsupported image format (expect PNG or JPEG): " + path.string());
}

void write_png(const std::filesystem::path& path, int height, int width,
               int channels, int bit_depth, const std::uint8_t* bytes) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCategory::io, "PNG write failed: " + path.string());
    }
    png_init_io(png, f.get());
    const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride =
        static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(bytes + y * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint8_t to8(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
    const Decoded d = decode_any(path);
    const double scale = d.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    RgbImage img{Plane(d.height, d.width), Plane(d.height, d.width),
                 Plane(d.height, d.width), path.stem().string()};
    const int ch = d.channels;
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * d.width + x) * ch;
            if (ch >= 3) {
                img.r.at(y, x) = d.pixels[base] * scale;
                img.g.at(y, x) = d.pixels[base + 1] * scale;
                img.b.at(y, x) = d.pixels[base + 2] * scale;
            } else {
                const double v = d.pixels[base] * scale;
                img.r.at(y, x) = img.g.at(y, x) = img.b.at(y, x) = v;
            }
        }
    }
    return img;
}

Mask load_mask(const std::filesystem::path& path) {
    const Decoded d = decode_any(path);
    const double scale = d.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    Mask m(d.height, d.width);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            const std::size_t base =
                (static_cast<std::size_t>(y) * d.width + x) * d.channels;
            m.at(y, x) = d.pixels[base] * scale >= 0.5 ? 1 : 0;
        }
    return m;
}

void save_png_gray8(const Plane& p, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) bytes[i] = to8(p.data()[i]);
    write_png(path, p.height(), p.width(), 1, 8, bytes.data());
}

void save_png_gray16(const Plane& p, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(p.size() * 2);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto v = static_cast<std::uint16_t>(
            std::lround(std::clamp(p.data()[i], 0.0, 1.0) * 65535.0));
        bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);  // network byte order
        bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xFF);
    }
    write_png(path, p.height(), p.width(), 1, 16, bytes.data());
}

void save_png_rgb8(const RgbImage& img, const std::filesystem::path& path) {
    const int H = img.height(), W = img.width();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(H) * W * 3);
    std::size_t i = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bytes[i++] = to8(img.r.at(y, x));
            bytes[i++] = to8(img.g.at(y, x));
            bytes[i++] = to8(img.b.at(y, x));
        }
    write_png(path, H, W, 3, 8, bytes.data());
}

void save_png_mask(const Mask& m, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(m.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i) bytes[i] = m.data[i] ? 255 : 0;
    write_png(path, m.height, m.width, 1, 8, bytes.data());
}

}  // namespace wdt
