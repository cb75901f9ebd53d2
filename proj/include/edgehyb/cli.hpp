#ifndef EDGEHYB_CLI_HPP
#define EDGEHYB_CLI_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "edgehyb/config.hpp"
#include "edgehyb/dataset.hpp"
#include "edgehyb/evaluation.hpp"
#include "edgehyb/model.hpp"
#include "edgehyb/pipeline.hpp"

namespace edgehyb {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// sobel, prewitt, roberts, log, zerocross, canny
const std::vector<std::string>& classical_methods();

/// Everything `detect` accepts: "hybrid" plus the classical methods.
std::vector<std::string> detect_methods();

/// Everything `evaluate` accepts: detect_methods() plus "oracle" (union of the
/// ground-truth maps, used to validate the harness).
std::vector<std::string> evaluate_methods_list();

/// Raw image -> 256x256 edge map. Classical detectors run on the resized,
/// normalized input; "hybrid" needs `hybrid` and honours cfg.binary.
Detector make_detector(const std::string& method, const RunConfig& cfg, const HybridDetector* hybrid = nullptr);

/// Resized, normalized images with averaged annotator targets.
std::vector<TrainingSample> load_training_set(const DatasetManifest& m, const std::string& split);

std::vector<EvalItem> load_eval_items(const DatasetManifest& m, const std::string& split);

/// Trains the CNN on cfg.train_split, writes <bundle>/cnn.ckpt and <bundle>/train_log.csv.
TrainLog train_cnn_stage(const DatasetManifest& m, const RunConfig& cfg, const std::filesystem::path& bundle);

/// Needs <bundle>/cnn.ckpt. Samples pixels from every training image, fits the
/// SVM, calibrates on the training images and writes the full bundle.
HybridDetector train_svm_stage(const DatasetManifest& m, const RunConfig& cfg, const std::filesystem::path& bundle);

/// One summary per method, in the requested order.
std::vector<EvalSummary> evaluate_methods(const DatasetManifest& m, const RunConfig& cfg,
                                          const std::vector<std::string>& methods);

/// Entry point of the edgehyb executable; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace edgehyb

#endif  // EDGEHYB_CLI_HPP
