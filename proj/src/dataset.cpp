#include "edgehyb/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "edgehyb/errors.hpp"

namespace fs = std::filesystem;

namespace edgehyb {

namespace {

const char* const kSplits[] = {"train", "val", "test"};

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// <id>_gt<k>.png -> (id, k); false when the name does not follow the pattern.
bool parse_gt_name(const std::string& filename, std::string& id, int& k) {
    if (filename.size() < 8 || filename.substr(filename.size() - 4) != ".png") return false;
    const std::string stem = filename.substr(0, filename.size() - 4);
    const std::size_t pos = stem.rfind("_gt");
    if (pos == std::string::npos || pos == 0 || pos + 3 == stem.size()) return false;
    const std::string digits = stem.substr(pos + 3);
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) return false;
    if (digits.size() > 6) return false;
    id = stem.substr(0, pos);
    k = std::stoi(digits);
    return true;
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string relative_to(const fs::path& p, const fs::path& root) { return p.lexically_relative(root).generic_string(); }

void scan_split(const fs::path& root, const fs::path& image_dir, const fs::path& gt_dir, const std::string& split,
                DatasetManifest& m) {
    std::map<std::string, std::map<int, fs::path>> gts;
    if (fs::is_directory(gt_dir)) {
        for (const fs::path& p : sorted_entries(gt_dir)) {
            std::string id;
            int k = 0;
            if (parse_gt_name(p.filename().string(), id, k)) gts[id][k] = p;
        }
    }
    std::map<std::string, fs::path> images;
    for (const fs::path& p : sorted_entries(image_dir)) {
        if (!is_image_file(p)) continue;
        const std::string id = p.stem().string();
        if (images.count(id)) throw DataError("two images share the id " + id + " in " + image_dir.string());
        images[id] = p;
    }
    for (const auto& [id, path] : images) {
        const GrayImage img = load_image(path);
        auto it = gts.find(id);
        if (it == gts.end()) {
            m.skipped.push_back({relative_to(path, root), "no ground truth"});
            continue;
        }
        Sample s;
        s.id = id;
        s.image_path = relative_to(path, root);
        s.split = split;
        for (const auto& [k, gt_path] : it->second) {
            const BinaryMap mask = load_mask(gt_path);
            if (mask.height != img.height || mask.width != img.width)
                throw DataError("ground truth " + gt_path.string() + " is " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " but the image is " + std::to_string(img.height) + "x" +
                                std::to_string(img.width));
            s.gt_paths.push_back(relative_to(gt_path, root));
        }
        m.samples.push_back(std::move(s));
    }
}

}  // namespace

Layout parse_layout(const std::string& name) {
    if (name == "bsds-like") return Layout::BsdsLike;
    if (name == "flat-pairs") return Layout::FlatPairs;
    throw ArgumentError("unknown layout '" + name + "' (expected bsds-like or flat-pairs)");
}

const char* layout_name(Layout layout) { return layout == Layout::BsdsLike ? "bsds-like" : "flat-pairs"; }

std::vector<Sample> DatasetManifest::split(const std::string& name) const {
    std::vector<Sample> out;
    for (const Sample& s : samples)
        if (s.split == name) out.push_back(s);
    return out;
}

fs::path DatasetManifest::resolve(const std::string& relative) const { return fs::path(root) / relative; }

DatasetManifest ingest_directory(const fs::path& root, Layout layout, const std::string& created) {
    if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
    const fs::path images = root / "images";
    if (!fs::is_directory(images)) throw DataError("dataset root " + root.string() + " has no images/ directory");
    DatasetManifest m;
    m.root = fs::absolute(root).lexically_normal().generic_string();
    if (!m.root.empty() && m.root.back() == '/' && m.root.size() > 1) m.root.pop_back();
    m.name = fs::path(m.root).filename().string();
    m.layout = layout;
    m.created = created;
    if (layout == Layout::BsdsLike) {
        for (const char* split : kSplits)
            if (fs::is_directory(images / split)) scan_split(root, images / split, root / "groundtruth" / split, split, m);
    } else {
        scan_split(root, images, root / "groundtruth", "test", m);
    }
    if (m.samples.empty()) throw DataError("no usable samples under " + root.string());
    return m;
}

std::string manifest_json(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["format_version"] = kManifestFormatVersion;
    j["name"] = m.name;
    j["root"] = m.root;
    j["layout"] = layout_name(m.layout);
    j["created"] = m.created;
    j["samples"] = nlohmann::ordered_json::array();
    for (const Sample& s : m.samples) {
        nlohmann::ordered_json e;
        e["id"] = s.id;
        e["split"] = s.split;
        e["image"] = s.image_path;
        e["groundtruth"] = s.gt_paths;
        j["samples"].push_back(e);
    }
    j["skipped"] = nlohmann::ordered_json::array();
    for (const SkippedSample& s : m.skipped) j["skipped"].push_back({{"image", s.image_path}, {"reason", s.reason}});
    return j.dump(2) + '\n';
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest_json(m);
    if (!out) throw IoError("failed writing " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read manifest " + path.string());
    DatasetManifest m;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.at("format_version").get<int>() != kManifestFormatVersion)
            throw FormatError("unsupported manifest version in " + path.string());
        m.name = j.at("name").get<std::string>();
        m.root = j.at("root").get<std::string>();
        m.layout = parse_layout(j.at("layout").get<std::string>());
        m.created = j.value("created", "");
        for (const auto& e : j.at("samples")) {
            Sample s;
            s.id = e.at("id").get<std::string>();
            s.split = e.at("split").get<std::string>();
            s.image_path = e.at("image").get<std::string>();
            s.gt_paths = e.at("groundtruth").get<std::vector<std::string>>();
            if (s.gt_paths.empty()) throw FormatError("sample " + s.id + " lists no ground truth");
            m.samples.push_back(std::move(s));
        }
        for (const auto& e : j.value("skipped", nlohmann::json::array()))
            m.skipped.push_back({e.at("image").get<std::string>(), e.at("reason").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad manifest " + path.string() + ": " + e.what());
    }
    if (fs::path(m.root).is_relative()) m.root = (path.parent_path() / m.root).lexically_normal().generic_string();
    std::vector<std::string> ids;
    for (const Sample& s : m.samples) {
        ids.push_back(s.split + '/' + s.id);
        if (!fs::exists(m.resolve(s.image_path))) throw DataError("missing image " + m.resolve(s.image_path).string());
        for (const std::string& g : s.gt_paths)
            if (!fs::exists(m.resolve(g))) throw DataError("missing ground truth " + m.resolve(g).string());
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw FormatError("duplicate sample ids in " + path.string());
    return m;
}

BinaryMap load_mask(const fs::path& path) {
    const GrayImage img = load_image(path);
    BinaryMap m(img.height, img.width);
    for (std::size_t i = 0; i < img.size(); ++i) m.bits[i] = img.pixels[i] > 0.0 ? 1 : 0;
    return m;
}

std::vector<BinaryMap> load_eval_gts(const DatasetManifest& m, const Sample& s, int size) {
    std::vector<BinaryMap> out;
    for (const std::string& g : s.gt_paths) {
        const BinaryMap mask = load_mask(m.resolve(g));
        BinaryMap r(size, size);
        r.bits = resize_nearest(mask.bits, mask.height, mask.width, size, size);
        out.push_back(std::move(r));
    }
    return out;
}

RealMap load_training_targets(const DatasetManifest& m, const Sample& s, int size) {
    const std::vector<BinaryMap> gts = load_eval_gts(m, s, size);
    RealMap t(size, size);
    for (const BinaryMap& g : gts)
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] += g.bits[i];
    const double n = static_cast<double>(gts.size());
    for (double& v : t.data) v /= n;
    return t;
}

GrayImage load_sample_image(const DatasetManifest& m, const Sample& s) { return load_image(m.resolve(s.image_path)); }

}  // namespace edgehyb
