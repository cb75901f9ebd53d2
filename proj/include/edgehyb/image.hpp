#ifndef EDGEHYB_IMAGE_HPP
#define EDGEHYB_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace edgehyb {

enum class RangeTag { Raw8, Unit };

/// Row-major 2-D real raster. Used for intermediate filter responses.
struct RealMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    RealMap() = default;
    RealMap(int h, int w, double fill = 0.0);

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

/// Grayscale image. Raw8 pixels lie in [0,255], Unit pixels in [0,1].
/// Pixels are stored as reals so that resized raw images keep sub-integer detail.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;
    RangeTag range = RangeTag::Raw8;

    GrayImage() = default;
    GrayImage(int h, int w, RangeTag tag, double fill = 0.0);

    double& operator()(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    double operator()(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return pixels.size(); }
    bool empty() const { return pixels.empty(); }

    RealMap as_real_map() const;
};

/// Throws ArgumentError if the image violates its size or range invariants.
void validate(const GrayImage& img);

/// Small dense correlation kernel, row-major.
struct Kernel {
    int rows = 0;
    int cols = 0;
    std::vector<double> weights;

    Kernel() = default;
    Kernel(int r, int c, std::vector<double> w);

    double operator()(int r, int c) const { return weights[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Border { Replicate, Zero };

// ---- decoding / encoding ----

/// Decodes a PNG or JPEG file (detected by signature) to Raw8 luma.
/// Colour pixels use round(0.299 R + 0.587 G + 0.114 B); alpha is ignored;
/// 16-bit PNG samples are reduced to their high byte.
GrayImage load_image(const std::filesystem::path& path);

/// Luma of one RGB triple under the fixed BT.601 weights.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Writes an 8-bit grayscale PNG; `pixels` must hold height*width bytes.
void save_png_gray8(const std::filesystem::path& path, int height, int width,
                    std::span<const std::uint8_t> pixels);

/// Saves a Raw8 image (rounded, clamped) or a Unit image (scaled by 255).
void save_image(const std::filesystem::path& path, const GrayImage& img);

/// Quantizes [0,1] values to bytes: round(255 * clamp(v, 0, 1)).
std::vector<std::uint8_t> to_bytes_unit(std::span<const double> values);

// ---- geometry / intensity ----

/// Bilinear resampling with half-pixel-centred coordinates
/// (src = (dst + 0.5) * in / out - 0.5, clamped to the image).
GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w);

/// Nearest-neighbour resampling of a binary mask (half-pixel-centred).
std::vector<std::uint8_t> resize_nearest(std::span<const std::uint8_t> mask, int in_h, int in_w,
                                         int out_h, int out_w);

/// Divides every pixel by 255. Throws on Unit input.
GrayImage normalize_unit(const GrayImage& img);

/// Centred cross-correlation (kernel not flipped); output has the input's size.
/// Both kernel dimensions must be odd.
RealMap convolve2d(const RealMap& img, const Kernel& kernel, Border border = Border::Replicate);

RealMap transpose(const RealMap& m);

}  // namespace edgehyb

#endif  // EDGEHYB_IMAGE_HPP
