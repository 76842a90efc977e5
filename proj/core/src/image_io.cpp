#include "hemacv/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace hemacv {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f)
        throw std::runtime_error("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_abort(png_structp png, png_const_charp msg) {
    // Stash the message for the catch site; control returns via longjmp.
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err)
        *err = msg ? msg : "libpng error";
    longjmp(png_jmpbuf(png), 1);
}

void png_warn_ignore(png_structp, png_const_charp) {}

struct JpegErrorMgr {
    jpeg_error_mgr mgr;
    jmp_buf jump;
    std::string message;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    char buf[JMSG_LENGTH_MAX];
    (*cinfo->err->format_message)(cinfo, buf);
    err->message = buf;
    longjmp(err->jump, 1);
}

RgbImage read_png_file(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    std::string errmsg;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_abort, png_warn_ignore);
    if (!png)
        throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    RgbImage out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode " + path.string() + ": " + errmsg);
    }

    png_init_io(png, f.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);

    // Normalize every variant to 8-bit RGB.
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16)
        png_set_strip_16(png);
    png_set_strip_alpha(png);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != w * 3) {
        longjmp(png_jmpbuf(png), 1);
    }

    out = RgbImage(static_cast<int>(w), static_cast<int>(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(&out.at(0, static_cast<int>(y)));
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

GrayImage read_gray_png_file(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    std::string errmsg;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_abort, png_warn_ignore);
    if (!png)
        throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    GrayImage out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode " + path.string() + ": " + errmsg);
    }

    png_init_io(png, f.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);

    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16)
        png_set_strip_16(png);
    png_set_strip_alpha(png);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != w) {
        longjmp(png_jmpbuf(png), 1);
    }

    out = GrayImage(static_cast<int>(w), static_cast<int>(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(&out.at(0, static_cast<int>(y)));
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

RgbImage read_jpeg_file(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");

    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_exit;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("failed to decode " + path.string() + ": " + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    RgbImage out(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = reinterpret_cast<JSAMPROW>(&out.at(0, static_cast<int>(cinfo.output_scanline)));
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

void write_gray_png_raw(const std::filesystem::path& path, const std::uint8_t* data, int w, int h) {
    FilePtr f = open_file(path, "wb");
    std::string errmsg;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_abort, png_warn_ignore);
    if (!png)
        throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode " + path.string() + ": " + errmsg);
    }

    png_init_io(png, f.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

bool has_png_signature(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8] = {};
    const std::size_t got = std::fread(sig, 1, sizeof sig, f.get());
    return got == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

} // namespace

RgbImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("no such image: " + path.string());
    if (has_png_signature(path))
        return read_png_file(path);
    return read_jpeg_file(path);
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    if (img.empty())
        throw std::invalid_argument("write_png: empty image");
    FilePtr f = open_file(path, "wb");
    std::string errmsg;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_abort, png_warn_ignore);
    if (!png)
        throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode " + path.string() + ": " + errmsg);
    }

    png_init_io(png, f.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) {
        png_write_row(png,
                      const_cast<png_bytep>(reinterpret_cast<const png_byte*>(&img.at(0, y))));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& img) {
    if (img.empty())
        throw std::invalid_argument("write_gray_png: empty image");
    write_gray_png_raw(path, img.pixels().data(), img.width(), img.height());
}

GrayImage read_gray_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("no such image: " + path.string());
    return read_gray_png_file(path);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    if (mask.empty())
        throw std::invalid_argument("write_mask_png: empty mask");
    std::vector<std::uint8_t> bytes(mask.bits().size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = mask.bits()[i] ? 255 : 0;
    write_gray_png_raw(path, bytes.data(), mask.width(), mask.height());
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
    const GrayImage g = read_gray_png_file(path);
    BinaryMask mask(g.width(), g.height());
    for (std::size_t i = 0; i < g.pixels().size(); ++i)
        mask.bits()[i] = g.pixels()[i] != 0 ? 1 : 0;
    return mask;
}

} // namespace hemacv
