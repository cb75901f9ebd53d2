#include "edgehyb/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "edgehyb/errors.hpp"
#include "edgehyb/morphology.hpp"
#include "edgehyb/stats.hpp"

namespace edgehyb {

double ScoreCalibration::apply(double score) const {
    if (!(hi > lo)) return 0.5;
    return std::clamp((score - lo) / (hi - lo), 0.0, 1.0);
}

ScoreCalibration fit_calibration(std::vector<double> scores) {
    if (scores.empty()) throw ArgumentError("calibration needs at least one score");
    std::sort(scores.begin(), scores.end());
    return {quantile_sorted(scores, kCalibrationLowerPercentile),
            quantile_sorted(scores, kCalibrationUpperPercentile)};
}

void HybridDetector::check() const {
    if (cnn.layers.empty()) throw ConfigError("hybrid detector has no CNN");
    const std::size_t width = cnn.feature_channels();
    if (svm.dim() != width)
        throw ConfigError("SVM expects " + std::to_string(svm.dim()) + " features but the CNN tap has " +
                          std::to_string(width) + " channels");
}

GrayImage prepare_input(const GrayImage& raw) {
    return normalize_unit(resize_bilinear(raw, kModelSize, kModelSize));
}

std::vector<double> hybrid_scores(const HybridDetector& det, const GrayImage& raw) {
    det.check();
    const GrayImage unit = prepare_input(raw);
    const Matrix flat = flatten_features(extract_features(det.cnn, unit));
    return decision_values(det.svm, flat);
}

EdgeMap reshape_scores(std::span<const double> values, int height, int width) {
    if (height < 1 || width < 1 || values.size() != static_cast<std::size_t>(height) * width)
        throw ShapeError("score count does not match the target grid");
    EdgeMap e(height, width);
    for (std::size_t r = 0; r < values.size(); ++r)
        e(static_cast<int>(r / width), static_cast<int>(r % width)) = values[r];
    return e;
}

EdgeMap detect_hybrid(const HybridDetector& det, const GrayImage& raw) {
    std::vector<double> scores = hybrid_scores(det, raw);
    for (double& s : scores) s = det.calibration.apply(s);
    EdgeMap e = reshape_scores(scores, kModelSize, kModelSize);
    return det.postprocess ? postprocess_morphological(e, det.min_component) : e;
}

EdgeMap detect_hybrid_binary(const HybridDetector& det, const GrayImage& raw) {
    std::vector<double> scores = hybrid_scores(det, raw);
    for (double& s : scores) s = s > 0.0 ? 1.0 : 0.0;
    EdgeMap e = reshape_scores(scores, kModelSize, kModelSize);
    return det.postprocess ? postprocess_morphological(e, det.min_component) : e;
}

HybridDetector calibrate_scores(HybridDetector det, const std::vector<GrayImage>& images) {
    if (images.empty()) throw ArgumentError("calibration needs at least one image");
    std::vector<double> all;
    all.reserve(images.size() * kModelSize * kModelSize);
    for (const GrayImage& img : images) {
        const std::vector<double> s = hybrid_scores(det, img);
        all.insert(all.end(), s.begin(), s.end());
    }
    det.calibration = fit_calibration(std::move(all));
    return det;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace

void save_calibration(const std::filesystem::path& path, const ScoreCalibration& cal) {
    nlohmann::json j;
    j["format_version"] = kBundleFormatVersion;
    j["lower_percentile"] = kCalibrationLowerPercentile;
    j["upper_percentile"] = kCalibrationUpperPercentile;
    j["min"] = cal.lo;
    j["max"] = cal.hi;
    write_json(path, j);
}

ScoreCalibration load_calibration(const std::filesystem::path& path) {
    const nlohmann::json j = read_json(path);
    try {
        if (j.at("format_version").get<int>() != kBundleFormatVersion)
            throw FormatError("unsupported calibration version in " + path.string());
        return {j.at("min").get<double>(), j.at("max").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad calibration file " + path.string() + ": " + e.what());
    }
}

void save_bundle(const std::filesystem::path& dir, const HybridDetector& det) {
    det.check();
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "cnn.ckpt", det.cnn);
    save_svm(dir / "svm.json", det.svm);
    save_calibration(dir / "calibration.json", det.calibration);
    nlohmann::json j;
    j["format_version"] = kBundleFormatVersion;
    j["cnn"] = "cnn.ckpt";
    j["svm"] = "svm.json";
    j["calibration"] = "calibration.json";
    j["input_size"] = kModelSize;
    j["feature_channels"] = det.cnn.feature_channels();
    j["postprocess"] = det.postprocess;
    j["min_component"] = det.min_component;
    write_json(dir / "manifest.json", j);
}

HybridDetector load_bundle(const std::filesystem::path& dir) {
    const std::filesystem::path manifest = dir / "manifest.json";
    if (!std::filesystem::exists(manifest))
        throw DataError("bundle " + dir.string() + " has no manifest.json (train the svm stage first)");
    const nlohmann::json j = read_json(manifest);
    HybridDetector det;
    try {
        if (j.at("format_version").get<int>() != kBundleFormatVersion)
            throw FormatError("unsupported bundle version in " + manifest.string());
        det.cnn = load_checkpoint(dir / j.at("cnn").get<std::string>());
        det.svm = load_svm(dir / j.at("svm").get<std::string>());
        det.calibration = load_calibration(dir / j.at("calibration").get<std::string>());
        det.postprocess = j.value("postprocess", false);
        det.min_component = j.value("min_component", std::size_t{5});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad bundle manifest " + manifest.string() + ": " + e.what());
    }
    det.check();
    return det;
}

}  // namespace edgehyb
