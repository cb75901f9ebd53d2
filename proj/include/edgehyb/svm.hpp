#ifndef EDGEHYB_SVM_HPP
#define EDGEHYB_SVM_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "edgehyb/matrix.hpp"

namespace edgehyb {

/// Linear classifier f(x) = w . z(x) + b, where z standardizes each feature
/// with the stored mean and scale (identity when those are empty).
struct SvmModel {
    std::vector<double> w;
    double b = 0.0;
    double lambda = 1e-4;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    std::size_t dim() const { return w.size(); }
};

struct PixelSample {
    std::vector<double> feature;
    int label = 0;  // -1 non-edge, +1 edge
};

struct PixelDraw {
    std::vector<PixelSample> samples;
    int warnings = 0;  // images lacking one of the two classes
};

/// Draws up to `n_per_class` edge and non-edge rows of `fmat` uniformly without
/// replacement (all of a class when fewer exist). `gt` holds one 0/1 entry per
/// row. An image without edge pixels contributes nothing; a missing class of
/// either kind counts one warning.
PixelDraw sample_training_pixels(const Matrix& fmat, std::span<const std::uint8_t> gt, std::size_t n_per_class,
                                 std::uint64_t seed);

struct SvmOptions {
    double lambda = 1e-4;
    int max_epochs = 200;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    bool standardize = true;
};

struct SvmReport {
    int epochs = 0;
    bool converged = false;
    double max_violation = 0.0;  // largest projected-gradient magnitude in the last epoch
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct SvmFit {
    SvmModel model;
    SvmReport report;
};

/// Minimizes lambda (|w|^2 + b^2) + (1/n) sum max(0, 1 - y (w.z + b)) by dual
/// coordinate descent over a random permutation per epoch. The bias is handled as
/// an extra constant feature, so it is regularized along with w. Stops once the
/// largest projected-gradient violation of an epoch drops below `tol`.
/// Throws TrainingError unless both labels are present.
SvmFit train_svm(std::span<const PixelSample> samples, const SvmOptions& opts);

/// Primal objective of a model on a sample set (standardization applied).
double svm_objective(const SvmModel& model, std::span<const PixelSample> samples);

double decision_value(const SvmModel& model, std::span<const double> x);

/// One affine score per row; throws ShapeError on a width mismatch.
std::vector<double> decision_values(const SvmModel& model, const Matrix& fmat);

/// sign of the score, with a score of exactly 0 mapped to -1.
std::vector<int> predict_labels(const SvmModel& model, const Matrix& fmat);

inline constexpr int kSvmFormatVersion = 1;

void save_svm(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace edgehyb

#endif  // EDGEHYB_SVM_HPP
