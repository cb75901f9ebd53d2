#ifndef EDGEHYB_DATASET_HPP
#define EDGEHYB_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "edgehyb/image.hpp"
#include "edgehyb/morphology.hpp"

namespace edgehyb {

// bsds-like:   images/{train,val,test}/<id>.{png,jpg,jpeg}
//              groundtruth/{train,val,test}/<id>_gt<k>.png
// flat-pairs:  images/<id>.{png,jpg,jpeg}, groundtruth/<id>_gt<k>.png (split "test")
enum class Layout { BsdsLike, FlatPairs };

Layout parse_layout(const std::string& name);
const char* layout_name(Layout layout);

struct Sample {
    std::string id;
    std::string image_path;             // relative to the manifest root
    std::vector<std::string> gt_paths;  // annotator order _gt0, _gt1, ...
    std::string split;
};

struct SkippedSample {
    std::string image_path;
    std::string reason;
};

inline constexpr int kManifestFormatVersion = 1;

struct DatasetManifest {
    std::string name;
    std::string root;
    Layout layout = Layout::BsdsLike;
    std::string created;
    std::vector<Sample> samples;  // sorted by (split, id)
    std::vector<SkippedSample> skipped;

    std::vector<Sample> split(const std::string& split) const;
    std::filesystem::path resolve(const std::string& relative) const;
};

/// Scans `root`, decodes every image and mask once, and returns the manifest.
/// Images without ground truth are listed as skipped. `created` is copied verbatim.
DatasetManifest ingest_directory(const std::filesystem::path& root, Layout layout, const std::string& created = "");

std::string manifest_json(const DatasetManifest& m);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

/// Parses the manifest and checks that every referenced file exists. A relative
/// root is resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Mask decode: pixels > 0 are edges.
BinaryMap load_mask(const std::filesystem::path& path);

/// Annotator masks resized (nearest) to size x size and averaged.
RealMap load_training_targets(const DatasetManifest& m, const Sample& s, int size = 256);

/// Annotator masks resized (nearest) to size x size, one per annotator.
std::vector<BinaryMap> load_eval_gts(const DatasetManifest& m, const Sample& s, int size = 256);

GrayImage load_sample_image(const DatasetManifest& m, const Sample& s);

}  // namespace edgehyb

#endif  // EDGEHYB_DATASET_HPP
