#ifndef EDGEHYB_DETECTORS_HPP
#define EDGEHYB_DETECTORS_HPP

#include <optional>
#include <string>
#include <vector>

#include "edgehyb/image.hpp"

namespace edgehyb {

/// Per-pixel edge confidence in [0,1], row-major.
struct EdgeMap {
    int height = 0;
    int width = 0;
    std::vector<double> confidence;

    EdgeMap() = default;
    EdgeMap(int h, int w, double fill = 0.0);

    double& operator()(int r, int c) { return confidence[static_cast<std::size_t>(r) * width + c]; }
    double operator()(int r, int c) const { return confidence[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return confidence.size(); }
};

/// Throws ArgumentError if sizes disagree or any confidence is outside [0,1].
void validate(const EdgeMap& e);

/// Quantized 8-bit PNG of the confidences.
void save_edge_map(const std::string& path, const EdgeMap& e);

struct CannyParams {
    double sigma = 1.4;
    double low_frac = 0.4;       // low threshold as a fraction of the high one
    double high_quantile = 0.8;  // quantile of the non-zero gradient magnitudes
};

/// Largest value sqrt(gx^2 + gy^2) can reach over patches with entries in [0,1].
/// The magnitude is convex in the patch, so the maximum sits on a vertex of the
/// unit cube; all 2^(rows*cols) binary patches are enumerated.
double max_gradient_magnitude(const Kernel& gx, const Kernel& gy);

const Kernel& sobel_x();
const Kernel& sobel_y();
const Kernel& prewitt_x();
const Kernel& prewitt_y();
const Kernel& laplacian_3x3();

/// Normalized Gaussian of radius ceil(3 sigma).
Kernel gaussian_kernel(double sigma);

/// Laplacian-of-Gaussian kernel of radius ceil(3 sigma), shifted to zero sum.
Kernel log_kernel(double sigma);

// All detectors expect a Unit-ranged image (ArgumentError otherwise) and
// return a map of the same size.

EdgeMap sobel(const GrayImage& img);
EdgeMap prewitt(const GrayImage& img);

/// 2x2 diagonal differences anchored at the top-left pixel.
EdgeMap roberts(const GrayImage& img);

/// Zero-crossing strength of the LoG response, normalized by its image maximum.
EdgeMap log_detector(const GrayImage& img, double sigma = 2.0);

/// Zero crossings of an arbitrary second-derivative filter (default 3x3 Laplacian).
EdgeMap zerocross(const GrayImage& img, const std::optional<Kernel>& kernel = std::nullopt);

/// Binary {0,1} output: Gaussian smoothing, Sobel gradients, 4-direction NMS, hysteresis.
EdgeMap canny(const GrayImage& img, const CannyParams& params = {});

/// Zero-crossing strength of a response map: for each pixel, the largest
/// |R(a) - R(b)| over pairs with strictly opposite signs, then divided by the
/// image maximum. Pairs are the four opposing neighbour pairs around the pixel
/// and the pixel itself with each of its 8 neighbours.
EdgeMap zero_crossings(const RealMap& response);

}  // namespace edgehyb

#endif  // EDGEHYB_DETECTORS_HPP
