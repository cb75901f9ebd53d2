#ifndef EDGEHYB_MORPHOLOGY_HPP
#define EDGEHYB_MORPHOLOGY_HPP

#include <cstdint>
#include <vector>

#include "edgehyb/detectors.hpp"

namespace edgehyb {

/// Binary raster (0/1 bytes), row-major.
struct BinaryMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    BinaryMap() = default;
    BinaryMap(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& operator()(int r, int c) { return bits[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t operator()(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c]; }
    std::size_t count() const;
};

/// 1 where confidence >= threshold.
BinaryMap binarize(const EdgeMap& e, double threshold);

/// Sizes of the 8-connected components, indexed by label (label 0 unused).
/// `labels` receives one label per pixel (0 for background).
std::vector<std::size_t> label_components(const BinaryMap& m, std::vector<int>& labels);

/// Clears every 8-connected component with fewer than `min_size` pixels.
BinaryMap remove_small_components(const BinaryMap& m, std::size_t min_size);

/// Two-subiteration Zhang-Suen thinning run to a fixed point, then sequential
/// removal of the simple (Yokoi number 1) non-end pixels it leaves on staircases.
BinaryMap thin(const BinaryMap& m);

/// Binarize at 0.5, drop components smaller than `min_component`, thin, and keep
/// the original confidence where the skeleton survives (0 elsewhere).
EdgeMap postprocess_morphological(const EdgeMap& e, std::size_t min_component = 5);

}  // namespace edgehyb

#endif  // EDGEHYB_MORPHOLOGY_HPP
