#ifndef EDGEHYB_PIPELINE_HPP
#define EDGEHYB_PIPELINE_HPP

#include <filesystem>
#include <span>
#include <vector>

#include "edgehyb/detectors.hpp"
#include "edgehyb/image.hpp"
#include "edgehyb/model.hpp"
#include "edgehyb/svm.hpp"

namespace edgehyb {

/// Min-max map of decision values onto [0,1] using a stored score range.
struct ScoreCalibration {
    double lo = 0.0;
    double hi = 0.0;

    /// clamp((s - lo) / (hi - lo), 0, 1); a degenerate range (hi <= lo) maps to 0.5.
    double apply(double score) const;
};

inline constexpr double kCalibrationLowerPercentile = 0.01;
inline constexpr double kCalibrationUpperPercentile = 0.99;

/// 1st / 99th percentiles of the given scores.
ScoreCalibration fit_calibration(std::vector<double> scores);

struct HybridDetector {
    CnnModel cnn;
    SvmModel svm;
    ScoreCalibration calibration;
    bool postprocess = false;
    std::size_t min_component = 5;

    /// Throws ConfigError when the SVM width differs from the CNN tap width.
    void check() const;
};

/// Resize to 256x256 (bilinear) and divide by 255.
GrayImage prepare_input(const GrayImage& raw);

/// Raw SVM scores for every pixel of the 256x256 grid, row-major.
std::vector<double> hybrid_scores(const HybridDetector& det, const GrayImage& raw);

/// Row r of a flattened table -> pixel (r / w, r % w).
EdgeMap reshape_scores(std::span<const double> values, int height, int width);

/// Soft edge map: resize, normalize, CNN features, flatten, SVM scores,
/// calibrate, reshape, then optional morphological post-processing.
EdgeMap detect_hybrid(const HybridDetector& det, const GrayImage& raw);

/// Hard labels from the sign of the SVM score (score 0 counts as non-edge),
/// reshaped to {0,1}; post-processing applies when enabled.
EdgeMap detect_hybrid_binary(const HybridDetector& det, const GrayImage& raw);

/// Refits the calibration range over the decision values of `images`.
HybridDetector calibrate_scores(HybridDetector det, const std::vector<GrayImage>& images);

// ---- bundle directory ----

inline constexpr int kBundleFormatVersion = 1;

/// Writes manifest.json, cnn.ckpt, svm.json and calibration.json into `dir`.
void save_bundle(const std::filesystem::path& dir, const HybridDetector& det);
HybridDetector load_bundle(const std::filesystem::path& dir);

void save_calibration(const std::filesystem::path& path, const ScoreCalibration& cal);
ScoreCalibration load_calibration(const std::filesystem::path& path);

}  // namespace edgehyb

#endif  // EDGEHYB_PIPELINE_HPP
