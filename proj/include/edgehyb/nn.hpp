#ifndef EDGEHYB_NN_HPP
#define EDGEHYB_NN_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "edgehyb/rng.hpp"
#include "edgehyb/tensor.hpp"

namespace edgehyb {

// Layer primitives over [N,C,H,W] tensors. Every forward has an explicit
// backward; the sequential model chains them in reverse (no autodiff tape).

/// Convolution parameters. For conv2d the weights are [out, in, kh, kw] and the
/// bias has `out` entries. A transposed convolution reuses the same layout and
/// computes the adjoint of that convolution, so it maps `out` channels to `in`
/// channels and its bias has `in` entries.
struct ConvParams {
    Tensor weights;
    Tensor bias;
    int stride = 1;
    int padding = 0;

    std::size_t out_channels() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(1); }
    std::size_t kernel_h() const { return weights.dim(2); }
    std::size_t kernel_w() const { return weights.dim(3); }
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero bias.
/// `transposed` sizes the bias for the adjoint direction.
ConvParams make_conv(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw, int stride,
                     int padding, bool transposed, Rng& rng);

struct ConvGrads {
    Tensor grad_x;
    Tensor grad_w;
    Tensor grad_b;
};

std::size_t conv_output_size(std::size_t in, std::size_t k, int stride, int padding);
std::size_t transposed_conv_output_size(std::size_t in, std::size_t k, int stride, int padding);

Tensor conv2d_forward(const Tensor& x, const ConvParams& p);
ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p);

Tensor transposed_conv2d_forward(const Tensor& x, const ConvParams& p);
ConvGrads transposed_conv2d_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p);

// ---- batch normalization ----

enum class Mode { Train, Infer };

struct BatchNormParams {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
    double eps = 1e-5;
    double momentum = 0.1;

    /// gamma 1, beta 0, running mean 0, running variance 1.
    static BatchNormParams make(std::size_t channels);
    std::size_t channels() const { return gamma.numel(); }
};

struct BatchNormCache {
    Mode mode = Mode::Train;
    Tensor x_hat;
    std::vector<double> inv_std;  // per channel
};

struct BatchNormGrads {
    Tensor grad_x;
    Tensor grad_gamma;
    Tensor grad_beta;
};

/// Train mode normalizes with the (biased) batch statistics of each channel and
/// blends them into the running statistics: running = (1 - momentum) * running +
/// momentum * batch, using the unbiased variance. Infer mode uses the running
/// statistics; a zero running variance is allowed, eps guards the division.
Tensor batchnorm_forward(const Tensor& x, BatchNormParams& p, Mode mode, BatchNormCache* cache = nullptr);

/// Infer-mode forward that leaves the parameters untouched.
Tensor batchnorm_infer(const Tensor& x, const BatchNormParams& p, BatchNormCache* cache = nullptr);

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormParams& p);

// ---- pointwise ----

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_out, const Tensor& x);

Tensor sigmoid(const Tensor& x);
/// Takes the forward output y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& y);

// ---- pooling ----

struct MaxPoolResult {
    Tensor y;
    std::vector<std::size_t> argmax;  // flat input index per output element
};

/// 2x2 window, stride 2. Ties go to the first maximal cell in row-major order.
MaxPoolResult maxpool2d(const Tensor& x);
Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                          const Shape& input_shape);

// ---- loss / optimizer ----

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

/// Mean squared error over all elements; grad = 2 (pred - target) / count.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every parameter from its gradient buffer.
void adam_step(std::span<Tensor* const> params, AdamState& state, const AdamConfig& cfg);

}  // namespace edgehyb

#endif  // EDGEHYB_NN_HPP
