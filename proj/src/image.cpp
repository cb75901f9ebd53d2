#include "edgehyb/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "edgehyb/errors.hpp"

namespace edgehyb {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

GrayImage decode_png(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw FormatError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("libpng init failed");
    }
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG: " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * static_cast<std::size_t>(height));
    rows.resize(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) rows[r] = buffer.data() + stride * r;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(height, width, RangeTag::Raw8);
    for (int r = 0; r < height; ++r) {
        const png_byte* row = rows[r];
        for (int c = 0; c < width; ++c) {
            const png_byte* px = row + static_cast<std::size_t>(c) * channels;
            // 1: gray, 2: gray+alpha, 3: rgb, 4: rgba
            img(r, c) = channels <= 2 ? px[0] : luma(px[0], px[1], px[2]);
        }
    }
    return img;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

GrayImage decode_jpeg(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> buffer;
    int height = 0;
    int width = 0;
    int channels = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("corrupt JPEG: " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space != JCS_GRAYSCALE) cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    height = static_cast<int>(cinfo.output_height);
    width = static_cast<int>(cinfo.output_width);
    channels = cinfo.output_components;
    buffer.resize(static_cast<std::size_t>(height) * width * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buffer.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    GrayImage img(height, width, RangeTag::Raw8);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint8_t* px = buffer.data() + i * channels;
        img.pixels[i] = channels == 1 ? px[0] : luma(px[0], px[1], px[2]);
    }
    return img;
}

}  // namespace

RealMap::RealMap(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

GrayImage::GrayImage(int h, int w, RangeTag tag, double fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill), range(tag) {}

RealMap GrayImage::as_real_map() const {
    RealMap m;
    m.height = height;
    m.width = width;
    m.data = pixels;
    return m;
}

void validate(const GrayImage& img) {
    if (img.height < 0 || img.width < 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.height) * img.width)
        throw ArgumentError("image pixel count does not match its dimensions");
    const double hi = img.range == RangeTag::Raw8 ? 255.0 : 1.0;
    for (double v : img.pixels)
        if (!(v >= 0.0 && v <= hi)) throw ArgumentError("pixel outside declared range");
}

Kernel::Kernel(int r, int c, std::vector<double> w) : rows(r), cols(c), weights(std::move(w)) {
    if (r < 1 || c < 1 || weights.size() != static_cast<std::size_t>(r) * c)
        throw ArgumentError("kernel weight count does not match its dimensions");
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::array<unsigned char, 8> sig{};
    in.read(reinterpret_cast<char*>(sig.data()), sig.size());
    const auto got = in.gcount();
    in.close();
    static constexpr std::array<unsigned char, 8> kPng{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (got == 8 && sig == kPng) return decode_png(path);
    if (got >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return decode_jpeg(path);
    throw FormatError("unsupported image format (expected PNG or JPEG): " + path.string());
}

void save_png_gray8(const std::filesystem::path& path, int height, int width,
                    std::span<const std::uint8_t> pixels) {
    if (height < 1 || width < 1 || pixels.size() != static_cast<std::size_t>(height) * width)
        throw ArgumentError("PNG buffer does not match its dimensions");
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> to_bytes_unit(std::span<const double> values) {
    std::vector<std::uint8_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(values[i], 0.0, 1.0)));
    return out;
}

void save_image(const std::filesystem::path& path, const GrayImage& img) {
    if (img.range == RangeTag::Unit) {
        save_png_gray8(path, img.height, img.width, to_bytes_unit(img.pixels));
        return;
    }
    std::vector<std::uint8_t> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img.pixels[i]), 0L, 255L));
    save_png_gray8(path, img.height, img.width, bytes);
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

// Half-pixel-centred source coordinate for one output index.
Tap bilinear_tap(int dst, int in, int out) {
    double src = (dst + 0.5) * static_cast<double>(in) / out - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    return {lo, hi, src - lo};
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ArgumentError("resize target must be at least 1x1");
    if (img.empty()) throw ArgumentError("cannot resize an empty image");
    GrayImage out(out_h, out_w, img.range);
    std::vector<Tap> cols(static_cast<std::size_t>(out_w));
    for (int c = 0; c < out_w; ++c) cols[c] = bilinear_tap(c, img.width, out_w);
    for (int r = 0; r < out_h; ++r) {
        const Tap tr = bilinear_tap(r, img.height, out_h);
        for (int c = 0; c < out_w; ++c) {
            const Tap& tc = cols[c];
            const double top = std::lerp(img(tr.lo, tc.lo), img(tr.lo, tc.hi), tc.frac);
            const double bottom = std::lerp(img(tr.hi, tc.lo), img(tr.hi, tc.hi), tc.frac);
            out(r, c) = std::lerp(top, bottom, tr.frac);
        }
    }
    return out;
}

std::vector<std::uint8_t> resize_nearest(std::span<const std::uint8_t> mask, int in_h, int in_w,
                                         int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ArgumentError("resize target must be at least 1x1");
    if (in_h < 1 || in_w < 1 || mask.size() != static_cast<std::size_t>(in_h) * in_w)
        throw ArgumentError("mask does not match its dimensions");
    auto src_index = [](int dst, int in, int out) {
        const auto s = static_cast<int>(std::floor((dst + 0.5) * static_cast<double>(in) / out));
        return std::clamp(s, 0, in - 1);
    };
    std::vector<std::uint8_t> out(static_cast<std::size_t>(out_h) * out_w);
    for (int r = 0; r < out_h; ++r) {
        const int sr = src_index(r, in_h, out_h);
        for (int c = 0; c < out_w; ++c)
            out[static_cast<std::size_t>(r) * out_w + c] =
                mask[static_cast<std::size_t>(sr) * in_w + src_index(c, in_w, out_w)];
    }
    return out;
}

GrayImage normalize_unit(const GrayImage& img) {
    if (img.range != RangeTag::Raw8) throw ArgumentError("image is already unit-ranged");
    GrayImage out = img;
    out.range = RangeTag::Unit;
    for (double& v : out.pixels) v /= 255.0;
    return out;
}

RealMap convolve2d(const RealMap& img, const Kernel& kernel, Border border) {
    if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0)
        throw ArgumentError("convolve2d needs odd kernel dimensions");
    const int ar = kernel.rows / 2;
    const int ac = kernel.cols / 2;
    RealMap out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kernel.rows; ++i) {
                int rr = r + i - ar;
                if (rr < 0 || rr >= img.height) {
                    if (border == Border::Zero) continue;
                    rr = std::clamp(rr, 0, img.height - 1);
                }
                for (int j = 0; j < kernel.cols; ++j) {
                    int cc = c + j - ac;
                    if (cc < 0 || cc >= img.width) {
                        if (border == Border::Zero) continue;
                        cc = std::clamp(cc, 0, img.width - 1);
                    }
                    acc += kernel(i, j) * img(rr, cc);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

RealMap transpose(const RealMap& m) {
    RealMap t(m.width, m.height);
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) t(c, r) = m(r, c);
    return t;
}

}  // namespace edgehyb
