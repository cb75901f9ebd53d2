#ifndef EDGEHYB_FIXTURE_HPP
#define EDGEHYB_FIXTURE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "edgehyb/image.hpp"
#include "edgehyb/morphology.hpp"

namespace edgehyb {

struct FixtureOptions {
    int n_train = 30;
    int n_val = 0;
    int n_test = 10;
    int height = 256;
    int width = 256;
    int annotators = 2;
    double noise_sigma = 25.0;  // grey levels
    std::uint64_t seed = 7;
};

/// One synthetic scene: filled shapes over a shaded background plus noise.
/// Boundaries are the pixels of a region whose 4-neighbour lies in a region
/// drawn earlier. Annotator 0 marks every boundary; annotators k >= 1 omit the
/// boundary of one randomly chosen shape when there are at least two.
struct FixtureScene {
    GrayImage image;  // Raw8
    std::vector<BinaryMap> annotators;
};

FixtureScene make_scene(const FixtureOptions& opts, std::uint64_t scene_seed);

/// Writes a bsds-like tree under `root` (images/<split>/<id>.png,
/// groundtruth/<split>/<id>_gt<k>.png). Ids are <split>_<NNN>.
void generate_fixture(const std::filesystem::path& root, const FixtureOptions& opts);

}  // namespace edgehyb

#endif  // EDGEHYB_FIXTURE_HPP
