#include "mmfusion/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "mmfusion/errors.hpp"

namespace mmfusion {

namespace {

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

// libpng reports errors with longjmp, so the calls are confined to helpers
// whose only mutable state lives in the caller's frame.
bool decode_rgb(PngRead& ctx, std::vector<unsigned char>& bytes,
                std::vector<png_bytep>& rows, std::size_t& h, std::size_t& w) {
    if (setjmp(png_jmpbuf(ctx.png))) return false;
    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const png_byte color_type = png_get_color_type(ctx.png, ctx.info);
    const png_byte bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_strip_16(ctx.png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(ctx.png);
    }
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(ctx.png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(ctx.png);
    }
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    h = png_get_image_height(ctx.png, ctx.info);
    w = png_get_image_width(ctx.png, ctx.info);
    if (h == 0 || w == 0 || png_get_rowbytes(ctx.png, ctx.info) != w * 3) return false;
    bytes.resize(h * w * 3);
    rows.resize(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = bytes.data() + y * w * 3;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return true;
}

bool encode_rgb(PngWrite& ctx, std::vector<png_bytep>& rows, std::size_t h,
                std::size_t w) {
    if (setjmp(png_jmpbuf(ctx.png))) return false;
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w),
                 static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
    return true;
}

}  // namespace

Tensor read_png_rgb(const std::string& path) {
    PngRead ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open '" + path + "'");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw FormatError("'" + path + "' is not a PNG file");
    }
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (ctx.png) ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("libpng initialization failed");

    std::vector<unsigned char> bytes;
    std::vector<png_bytep> rows;
    std::size_t h = 0;
    std::size_t w = 0;
    if (!decode_rgb(ctx, bytes, rows, h, w)) {
        throw FormatError("failed to decode PNG '" + path + "'");
    }
    Tensor out({h, w, 3});
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out[i] = static_cast<double>(bytes[i]);
    }
    return out;
}

void write_png_rgb(const Tensor& rgb, const std::string& path) {
    if (rgb.rank() != 3 || rgb.dim(2) != 3) {
        throw DimensionError("expected an [H,W,3] image, got " + shape_string(rgb.shape()));
    }
    const std::size_t h = rgb.dim(0);
    const std::size_t w = rgb.dim(1);
    std::vector<unsigned char> bytes(h * w * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::round(rgb[i]);
        bytes[i] = static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
    }
    std::vector<png_bytep> rows(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = bytes.data() + y * w * 3;

    PngWrite ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open '" + path + "' for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (ctx.png) ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("libpng initialization failed");
    if (!encode_rgb(ctx, rows, h, w)) {
        throw IoError("failed to encode PNG '" + path + "'");
    }
}

Tensor read_depth_raw(const std::string& path, std::size_t height, std::size_t width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    const std::size_t n = height * width;
    std::vector<unsigned char> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw FormatError("depth file '" + path + "' holds fewer than " +
                          std::to_string(n) + " values");
    }
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1) {
        throw FormatError("depth file '" + path + "' larger than " +
                          std::to_string(height) + "x" + std::to_string(width));
    }
    Tensor out({height, width});
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<double>(buf[2 * i] | (buf[2 * i + 1] << 8));
    }
    return out;
}

void write_depth_raw(const Tensor& depth, const std::string& path) {
    if (depth.rank() != 2) {
        throw DimensionError("expected an [H,W] depth plane, got " +
                             shape_string(depth.shape()));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::vector<unsigned char> buf(depth.size() * 2);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const double v = std::round(depth[i]);
        const unsigned u = static_cast<unsigned>(v < 0.0 ? 0.0 : (v > 65535.0 ? 65535.0 : v));
        buf[2 * i] = static_cast<unsigned char>(u & 0xFF);
        buf[2 * i + 1] = static_cast<unsigned char>((u >> 8) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mmfusion
