#ifndef EDGEHYB_MODEL_HPP
#define EDGEHYB_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "edgehyb/detectors.hpp"
#include "edgehyb/image.hpp"
#include "edgehyb/matrix.hpp"
#include "edgehyb/nn.hpp"

namespace edgehyb {

inline constexpr int kModelSize = 256;        // pipeline input edge length
inline constexpr std::size_t kFeatureChannels = 16;
inline constexpr const char* kFeatureTapName = "conv_6";

enum class LayerKind : std::uint32_t { Conv = 0, TransposedConv = 1, BatchNorm = 2, Relu = 3, MaxPool = 4, Sigmoid = 5 };

const char* layer_kind_name(LayerKind kind);

struct Layer {
    std::string name;
    LayerKind kind = LayerKind::Relu;
    ConvParams conv;     // Conv / TransposedConv
    BatchNormParams bn;  // BatchNorm
};

/// Per-layer state recorded by a training forward pass for the backward pass.
struct ForwardCache {
    std::vector<Tensor> inputs;  // input of each layer
    Tensor output;               // final output (the sigmoid backward needs it)
    std::vector<BatchNormCache> bn;
    std::vector<std::vector<std::size_t>> pool_argmax;
};

/// Sequential encoder/decoder:
///
///   conv_1 1->16 3x3, conv_2 16->16 3x3, pool_1,
///   conv_3 16->32 3x3, pool_2, conv_4 32->64 3x3,
///   up_5a 64->32 4x4/2, up_5b 32->16 4x4/2, conv_6 16->16 3x3,
///   head 16->1 1x1, sigmoid
///
/// Every conv_* / up_* is followed by batch norm and ReLU. The ReLU after conv_6
/// is the feature tap: a full-resolution 16-channel map.
class CnnModel {
public:
    std::vector<Layer> layers;
    std::size_t feature_tap = 0;  // index of the layer whose output is the feature map

    /// Training forward: batch statistics, running stats updated, cache filled.
    Tensor forward_train(const Tensor& x, ForwardCache& cache);

    /// Inference forward through layers [0, last]; running statistics only.
    Tensor forward_infer(const Tensor& x, std::size_t last) const;
    Tensor forward_infer(const Tensor& x) const { return forward_infer(x, layers.size() - 1); }

    /// Back-propagates `grad_out` through the cached pass, accumulating into
    /// each parameter's gradient buffer. Returns the input gradient.
    Tensor backward(const Tensor& grad_out, const ForwardCache& cache);

    /// Learnable tensors in a fixed order (weights, biases, gammas, betas).
    std::vector<Tensor*> parameters();
    void zero_grad();

    std::size_t layer_index(const std::string& name) const;
    std::size_t feature_channels() const;
};

/// Seeded construction of the fixed architecture (Kaiming-uniform init).
CnnModel build_model(std::uint64_t seed);

/// Head activations for a 256x256 unit image.
EdgeMap forward_edge(const CnnModel& model, const GrayImage& img);

/// Feature tap activations [C,256,256] for a 256x256 unit image.
Tensor extract_features(const CnnModel& model, const GrayImage& img);

/// [C,256,256] -> 65536 x C; row r holds pixel (r / 256, r % 256).
Matrix flatten_features(const Tensor& fmap);

/// Inverse of flatten_features for an H x W grid.
Tensor unflatten_features(const Matrix& flat, int height, int width);

/// Wraps a unit image as a [1,1,H,W] tensor.
Tensor image_tensor(const GrayImage& img);

// ---- training ----

struct TrainConfig {
    int epochs = 30;
    int batch_size = 4;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    int checkpoint_interval = 0;               // iterations between checkpoints, 0 = off
    std::filesystem::path checkpoint_dir;      // where periodic checkpoints go
    std::filesystem::path log_path;            // TrainLog CSV, empty = not written
};

struct TrainRecord {
    long iteration = 0;
    double loss = 0.0;
    double rmse = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

/// One supervised pair: unit image and a same-size target map in [0,1].
struct TrainingSample {
    GrayImage image;
    RealMap target;
};

using TrainProgress = std::function<void(const TrainRecord&)>;

/// Adam on the pixelwise MSE of the head output. Each epoch visits the samples
/// in a freshly shuffled order (seeded); the loss recorded for an iteration is
/// the batch loss before that iteration's update.
TrainLog train_cnn(CnnModel& model, const std::vector<TrainingSample>& data, const TrainConfig& cfg,
                   const TrainProgress& progress = {});

void write_train_log(const std::filesystem::path& path, const TrainLog& log);

// ---- checkpoints ----

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint; the layout is described in docs/FORMATS.md.
void save_checkpoint(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace edgehyb

#endif  // EDGEHYB_MODEL_HPP
