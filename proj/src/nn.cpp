#include "edgehyb/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "edgehyb/errors.hpp"

namespace edgehyb {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct Geometry {
    std::size_t channels;  // channels of the "image" side of the im2col transform
    std::size_t height;
    std::size_t width;
    std::size_t kh;
    std::size_t kw;
    int stride;
    int padding;
    std::size_t out_h;
    std::size_t out_w;

    std::size_t rows() const { return channels * kh * kw; }
    std::size_t cols() const { return out_h * out_w; }
    bool trivial() const { return kh == 1 && kw == 1 && stride == 1 && padding == 0; }
};

// Output rows [oh0, oh1) of the im2col matrix:
// col[(c*kh + i)*kw + j, (oh-oh0)*out_w + ow] = img[c, oh*s + i - p, ow*s + j - p] (0 outside)
void im2col(const double* img, const Geometry& g, std::size_t oh0, std::size_t oh1, double* col) {
    const auto H = static_cast<long>(g.height);
    const auto W = static_cast<long>(g.width);
    const std::size_t ncols = (oh1 - oh0) * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                double* dst = col + ((c * g.kh + i) * g.kw + j) * ncols;
                for (std::size_t oh = oh0; oh < oh1; ++oh) {
                    const long r = static_cast<long>(oh) * g.stride + static_cast<long>(i) - g.padding;
                    double* row = dst + (oh - oh0) * g.out_w;
                    if (r < 0 || r >= H) {
                        std::fill(row, row + g.out_w, 0.0);
                        continue;
                    }
                    const double* src = img + (c * g.height + static_cast<std::size_t>(r)) * g.width;
                    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
                        const long cc = static_cast<long>(ow) * g.stride + static_cast<long>(j) - g.padding;
                        row[ow] = (cc < 0 || cc >= W) ? 0.0 : src[cc];
                    }
                }
            }
}

// Adjoint of im2col over the same row range: scatter-add into img.
void col2im(const double* col, const Geometry& g, std::size_t oh0, std::size_t oh1, double* img) {
    const auto H = static_cast<long>(g.height);
    const auto W = static_cast<long>(g.width);
    const std::size_t ncols = (oh1 - oh0) * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.kh; ++i)
            for (std::size_t j = 0; j < g.kw; ++j) {
                const double* src = col + ((c * g.kh + i) * g.kw + j) * ncols;
                for (std::size_t oh = oh0; oh < oh1; ++oh) {
                    const long r = static_cast<long>(oh) * g.stride + static_cast<long>(i) - g.padding;
                    if (r < 0 || r >= H) continue;
                    const double* row = src + (oh - oh0) * g.out_w;
                    double* dst = img + (c * g.height + static_cast<std::size_t>(r)) * g.width;
                    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
                        const long cc = static_cast<long>(ow) * g.stride + static_cast<long>(j) - g.padding;
                        if (cc >= 0 && cc < W) dst[cc] += row[ow];
                    }
                }
            }
}

// Output rows per im2col tile, sized so a tile stays near L2.
std::size_t tile_rows(const Geometry& g) {
    constexpr std::size_t kTileDoubles = 1u << 17;
    const std::size_t per_row = std::max<std::size_t>(1, g.rows() * g.out_w);
    return std::clamp<std::size_t>(kTileDoubles / per_row, 1, g.out_h);
}

// Reused scratch; the library runs single-threaded per call.
double* scratch(std::size_t n) {
    thread_local std::vector<double> buf;
    if (buf.size() < n) buf.resize(n);
    return buf.data();
}

void check_params(const ConvParams& p, bool transposed) {
    require_rank(p.weights, 4, "convolution weights");
    require_rank(p.bias, 1, "convolution bias");
    if (p.stride < 1) throw ShapeError("convolution stride must be positive");
    if (p.padding < 0) throw ShapeError("convolution padding must be non-negative");
    const std::size_t bias_len = transposed ? p.in_channels() : p.out_channels();
    if (p.bias.numel() != bias_len)
        throw ShapeError("convolution bias has " + std::to_string(p.bias.numel()) + " entries, expected " +
                         std::to_string(bias_len));
}

// Geometry of the forward convolution x -> y for conv2d.
Geometry conv_geometry(const Tensor& x, const ConvParams& p) {
    require_rank(x, 4, "conv2d input");
    check_params(p, false);
    if (x.dim(1) != p.in_channels())
        throw ShapeError("conv2d input has " + std::to_string(x.dim(1)) + " channels, weights expect " +
                         std::to_string(p.in_channels()));
    return {p.in_channels(), x.dim(2), x.dim(3), p.kernel_h(), p.kernel_w(), p.stride, p.padding,
            conv_output_size(x.dim(2), p.kernel_h(), p.stride, p.padding),
            conv_output_size(x.dim(3), p.kernel_w(), p.stride, p.padding)};
}

// Geometry of the underlying convolution z -> y for a transposed conv y -> z.
Geometry transposed_geometry(const Tensor& y, const ConvParams& p) {
    require_rank(y, 4, "transposed conv input");
    check_params(p, true);
    if (y.dim(1) != p.out_channels())
        throw ShapeError("transposed conv input has " + std::to_string(y.dim(1)) +
                         " channels, weights expect " + std::to_string(p.out_channels()));
    return {p.in_channels(),
            transposed_conv_output_size(y.dim(2), p.kernel_h(), p.stride, p.padding),
            transposed_conv_output_size(y.dim(3), p.kernel_w(), p.stride, p.padding),
            p.kernel_h(),
            p.kernel_w(),
            p.stride,
            p.padding,
            y.dim(2),
            y.dim(3)};
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t k, int stride, int padding) {
    const long span = static_cast<long>(in) + 2L * padding - static_cast<long>(k);
    if (span < 0 || span % stride != 0)
        throw ShapeError("convolution output size is not integral (in=" + std::to_string(in) +
                         ", k=" + std::to_string(k) + ", stride=" + std::to_string(stride) +
                         ", pad=" + std::to_string(padding) + ")");
    return static_cast<std::size_t>(span / stride + 1);
}

std::size_t transposed_conv_output_size(std::size_t in, std::size_t k, int stride, int padding) {
    const long out = (static_cast<long>(in) - 1) * stride - 2L * padding + static_cast<long>(k);
    if (in == 0 || out <= 0) throw ShapeError("transposed convolution output size is not positive");
    return static_cast<std::size_t>(out);
}

ConvParams make_conv(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw, int stride,
                     int padding, bool transposed, Rng& rng) {
    if (out_ch < 1 || in_ch < 1 || kh < 1 || kw < 1) throw ArgumentError("empty convolution");
    ConvParams p;
    p.weights = Tensor({out_ch, in_ch, kh, kw});
    p.bias = Tensor({transposed ? in_ch : out_ch});
    p.stride = stride;
    p.padding = padding;
    // fan-in counts the channels feeding each output position
    const double fan_in = static_cast<double>((transposed ? out_ch : in_ch) * kh * kw);
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& w : p.weights.values()) w = uniform_real(rng, -bound, bound);
    return p;
}

Tensor conv2d_forward(const Tensor& x, const ConvParams& p) {
    const Geometry g = conv_geometry(x, p);
    const std::size_t N = x.dim(0);
    const std::size_t cout = p.out_channels();
    Tensor y({N, cout, g.out_h, g.out_w});
    const ConstMatMap w(p.weights.data().data(), cout, g.rows());
    const std::size_t step = tile_rows(g);
    for (std::size_t n = 0; n < N; ++n) {
        const double* xn = x.data().data() + n * g.channels * g.height * g.width;
        MatMap yn(y.data().data() + n * cout * g.cols(), cout, g.cols());
        if (g.trivial()) {
            yn.noalias() = w * ConstMatMap(xn, g.rows(), g.cols());
        } else {
            for (std::size_t oh0 = 0; oh0 < g.out_h; oh0 += step) {
                const std::size_t oh1 = std::min(oh0 + step, g.out_h);
                const std::size_t nc = (oh1 - oh0) * g.out_w;
                double* col = scratch(g.rows() * nc);
                im2col(xn, g, oh0, oh1, col);
                yn.middleCols(oh0 * g.out_w, nc).noalias() = w * ConstMatMap(col, g.rows(), nc);
            }
        }
        for (std::size_t c = 0; c < cout; ++c) yn.row(c).array() += p.bias[c];
    }
    return y;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p) {
    const Geometry g = conv_geometry(x, p);
    const std::size_t N = x.dim(0);
    const std::size_t cout = p.out_channels();
    if (grad_out.shape() != Shape{N, cout, g.out_h, g.out_w})
        throw ShapeError("conv2d_backward: upstream gradient shape " + shape_string(grad_out.shape()) +
                         " does not match the forward output");
    ConvGrads out{Tensor(x.shape()), Tensor(p.weights.shape()), Tensor(p.bias.shape())};
    const ConstMatMap w(p.weights.data().data(), cout, g.rows());
    MatMap gw(out.grad_w.data().data(), cout, g.rows());
    const std::size_t step = tile_rows(g);
    for (std::size_t n = 0; n < N; ++n) {
        const double* xn = x.data().data() + n * g.channels * g.height * g.width;
        const ConstMatMap gy(grad_out.data().data() + n * cout * g.cols(), cout, g.cols());
        // ordered sum, independent of buffer alignment
        for (std::size_t c = 0; c < cout; ++c) {
            const double* row = gy.data() + c * g.cols();
            out.grad_b[c] += std::accumulate(row, row + g.cols(), 0.0);
        }
        double* gxn = out.grad_x.data().data() + n * g.channels * g.height * g.width;
        if (g.trivial()) {
            const ConstMatMap xm(xn, g.rows(), g.cols());
            gw.noalias() += gy * xm.transpose();
            MatMap gx(gxn, g.rows(), g.cols());
            gx.noalias() = w.transpose() * gy;
            continue;
        }
        for (std::size_t oh0 = 0; oh0 < g.out_h; oh0 += step) {
            const std::size_t oh1 = std::min(oh0 + step, g.out_h);
            const std::size_t nc = (oh1 - oh0) * g.out_w;
            double* col = scratch(g.rows() * nc);
            im2col(xn, g, oh0, oh1, col);
            const auto gyt = gy.middleCols(oh0 * g.out_w, nc);
            gw.noalias() += gyt * ConstMatMap(col, g.rows(), nc).transpose();
            MatMap(col, g.rows(), nc).noalias() = w.transpose() * gyt;
            col2im(col, g, oh0, oh1, gxn);
        }
    }
    return out;
}

Tensor transposed_conv2d_forward(const Tensor& x, const ConvParams& p) {
    const Geometry g = transposed_geometry(x, p);
    const std::size_t N = x.dim(0);
    const std::size_t cin = p.out_channels();  // channels of x
    Tensor z({N, g.channels, g.height, g.width});
    const ConstMatMap w(p.weights.data().data(), cin, g.rows());
    const std::size_t plane = g.height * g.width;
    const std::size_t step = tile_rows(g);
    for (std::size_t n = 0; n < N; ++n) {
        const ConstMatMap xn(x.data().data() + n * cin * g.cols(), cin, g.cols());
        double* zn = z.data().data() + n * g.channels * plane;
        if (g.trivial()) {
            MatMap zm(zn, g.rows(), g.cols());
            zm.noalias() = w.transpose() * xn;
        } else {
            for (std::size_t oh0 = 0; oh0 < g.out_h; oh0 += step) {
                const std::size_t oh1 = std::min(oh0 + step, g.out_h);
                const std::size_t nc = (oh1 - oh0) * g.out_w;
                double* col = scratch(g.rows() * nc);
                MatMap(col, g.rows(), nc).noalias() = w.transpose() * xn.middleCols(oh0 * g.out_w, nc);
                col2im(col, g, oh0, oh1, zn);
            }
        }
        for (std::size_t c = 0; c < g.channels; ++c) {
            double* plane_ptr = zn + c * plane;
            const double b = p.bias[c];
            for (std::size_t i = 0; i < plane; ++i) plane_ptr[i] += b;
        }
    }
    return z;
}

ConvGrads transposed_conv2d_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p) {
    const Geometry g = transposed_geometry(x, p);
    const std::size_t N = x.dim(0);
    const std::size_t cin = p.out_channels();
    if (grad_out.shape() != Shape{N, g.channels, g.height, g.width})
        throw ShapeError("transposed_conv2d_backward: upstream gradient shape " +
                         shape_string(grad_out.shape()) + " does not match the forward output");
    ConvGrads out{Tensor(x.shape()), Tensor(p.weights.shape()), Tensor(p.bias.shape())};
    const ConstMatMap w(p.weights.data().data(), cin, g.rows());
    MatMap gw(out.grad_w.data().data(), cin, g.rows());
    const std::size_t plane = g.height * g.width;
    const std::size_t step = tile_rows(g);
    for (std::size_t n = 0; n < N; ++n) {
        const double* gz = grad_out.data().data() + n * g.channels * plane;
        for (std::size_t c = 0; c < g.channels; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += gz[c * plane + i];
            out.grad_b[c] += s;
        }
        const ConstMatMap xn(x.data().data() + n * cin * g.cols(), cin, g.cols());
        MatMap gx(out.grad_x.data().data() + n * cin * g.cols(), cin, g.cols());
        if (g.trivial()) {
            const ConstMatMap cm(gz, g.rows(), g.cols());
            gw.noalias() += xn * cm.transpose();
            gx.noalias() = w * cm;
            continue;
        }
        for (std::size_t oh0 = 0; oh0 < g.out_h; oh0 += step) {
            const std::size_t oh1 = std::min(oh0 + step, g.out_h);
            const std::size_t nc = (oh1 - oh0) * g.out_w;
            double* col = scratch(g.rows() * nc);
            im2col(gz, g, oh0, oh1, col);
            const ConstMatMap cm(col, g.rows(), nc);
            gw.noalias() += xn.middleCols(oh0 * g.out_w, nc) * cm.transpose();
            gx.middleCols(oh0 * g.out_w, nc).noalias() = w * cm;
        }
    }
    return out;
}

// ---- batch normalization ----

BatchNormParams BatchNormParams::make(std::size_t channels) {
    BatchNormParams p;
    p.gamma = Tensor({channels}, 1.0);
    p.beta = Tensor({channels}, 0.0);
    p.running_mean = Tensor({channels}, 0.0);
    p.running_var = Tensor({channels}, 1.0);
    return p;
}

namespace {

void check_bn(const Tensor& x, const BatchNormParams& p) {
    require_rank(x, 4, "batch norm input");
    const std::size_t C = p.channels();
    if (p.beta.numel() != C || p.running_mean.numel() != C || p.running_var.numel() != C)
        throw ShapeError("batch norm parameter tensors disagree on the channel count");
    if (x.dim(1) != C)
        throw ShapeError("batch norm input has " + std::to_string(x.dim(1)) + " channels, expected " +
                         std::to_string(C));
}

Tensor bn_apply(const Tensor& x, const BatchNormParams& p, std::span<const double> mean,
                std::span<const double> inv_std, Mode mode, BatchNormCache* cache) {
    const std::size_t N = x.dim(0);
    const std::size_t C = x.dim(1);
    const std::size_t plane = x.dim(2) * x.dim(3);
    Tensor y(x.shape());
    Tensor x_hat = cache ? Tensor(x.shape()) : Tensor();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (n * C + c) * plane;
            const double g = p.gamma[c];
            const double b = p.beta[c];
            for (std::size_t i = 0; i < plane; ++i) {
                const double xh = (x[base + i] - mean[c]) * inv_std[c];
                if (cache) x_hat[base + i] = xh;
                y[base + i] = g * xh + b;
            }
        }
    if (cache) {
        cache->mode = mode;
        cache->x_hat = std::move(x_hat);
        cache->inv_std.assign(inv_std.begin(), inv_std.end());
    }
    return y;
}

}  // namespace

Tensor batchnorm_infer(const Tensor& x, const BatchNormParams& p, BatchNormCache* cache) {
    check_bn(x, p);
    const std::size_t C = p.channels();
    std::vector<double> inv_std(C);
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(p.running_var[c] + p.eps);
    return bn_apply(x, p, p.running_mean.data(), inv_std, Mode::Infer, cache);
}

Tensor batchnorm_forward(const Tensor& x, BatchNormParams& p, Mode mode, BatchNormCache* cache) {
    if (mode == Mode::Infer) return batchnorm_infer(x, p, cache);
    check_bn(x, p);
    const std::size_t N = x.dim(0);
    const std::size_t C = x.dim(1);
    const std::size_t plane = x.dim(2) * x.dim(3);
    const double count = static_cast<double>(N * plane);
    std::vector<double> mean(C, 0.0);
    std::vector<double> var(C, 0.0);
    std::vector<double> inv_std(C);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) s += x[base + i];
        }
        mean[c] = s / count;
        double ss = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = x[base + i] - mean[c];
                ss += d * d;
            }
        }
        var[c] = ss / count;
        inv_std[c] = 1.0 / std::sqrt(var[c] + p.eps);
        const double unbiased = count > 1.0 ? ss / (count - 1.0) : var[c];
        p.running_mean[c] = (1.0 - p.momentum) * p.running_mean[c] + p.momentum * mean[c];
        p.running_var[c] = (1.0 - p.momentum) * p.running_var[c] + p.momentum * unbiased;
    }
    return bn_apply(x, p, mean, inv_std, Mode::Train, cache);
}

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormParams& p) {
    if (grad_out.shape() != cache.x_hat.shape())
        throw ShapeError("batchnorm_backward: upstream gradient shape does not match the cache");
    const std::size_t N = grad_out.dim(0);
    const std::size_t C = grad_out.dim(1);
    const std::size_t plane = grad_out.dim(2) * grad_out.dim(3);
    const double count = static_cast<double>(N * plane);
    BatchNormGrads g{Tensor(grad_out.shape()), Tensor({C}), Tensor({C})};
    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xh = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += grad_out[base + i];
                sum_dy_xh += grad_out[base + i] * cache.x_hat[base + i];
            }
        }
        g.grad_beta[c] = sum_dy;
        g.grad_gamma[c] = sum_dy_xh;
        const double scale = p.gamma[c] * cache.inv_std[c];
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double dy = grad_out[base + i];
                if (cache.mode == Mode::Infer) {
                    g.grad_x[base + i] = scale * dy;
                } else {
                    g.grad_x[base + i] =
                        scale * (dy - sum_dy / count - cache.x_hat[base + i] * sum_dy_xh / count);
                }
            }
        }
    }
    return g;
}

// ---- pointwise ----

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& x) {
    if (grad_out.shape() != x.shape()) throw ShapeError("relu_backward: shape mismatch");
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return y;
}

Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& y) {
    if (grad_out.shape() != y.shape()) throw ShapeError("sigmoid_backward: shape mismatch");
    Tensor g(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) g[i] = grad_out[i] * y[i] * (1.0 - y[i]);
    return g;
}

// ---- pooling ----

MaxPoolResult maxpool2d(const Tensor& x) {
    require_rank(x, 4, "maxpool2d input");
    const std::size_t N = x.dim(0);
    const std::size_t C = x.dim(1);
    const std::size_t H = x.dim(2);
    const std::size_t W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0) throw ShapeError("maxpool2d needs even spatial dimensions");
    const std::size_t Ho = H / 2;
    const std::size_t Wo = W / 2;
    MaxPoolResult out{Tensor({N, C, Ho, Wo}), std::vector<std::size_t>(N * C * Ho * Wo)};
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const std::size_t base = nc * H * W;
        for (std::size_t r = 0; r < Ho; ++r)
            for (std::size_t c = 0; c < Wo; ++c, ++o) {
                std::size_t best = base + (2 * r) * W + 2 * c;
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) {
                        const std::size_t idx = base + (2 * r + i) * W + 2 * c + j;
                        if (x[idx] > x[best]) best = idx;
                    }
                out.y[o] = x[best];
                out.argmax[o] = best;
            }
    }
    return out;
}

Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                          const Shape& input_shape) {
    if (argmax.size() != grad_out.numel()) throw ShapeError("maxpool2d_backward: index count mismatch");
    Tensor g(input_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) {
        if (argmax[o] >= g.numel()) throw ShapeError("maxpool2d_backward: index out of range");
        g[argmax[o]] += grad_out[o];
    }
    return g;
}

// ---- loss / optimizer ----

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("mse_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(target.shape()));
    if (pred.numel() == 0) throw ShapeError("mse_loss of empty tensors");
    const double count = static_cast<double>(pred.numel());
    LossResult r{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred[i] - target[i];
        r.loss += d * d;
        r.grad[i] = 2.0 * d / count;
    }
    r.loss /= count;
    return r;
}

void adam_step(std::span<Tensor* const> params, AdamState& state, const AdamConfig& cfg) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->numel(), 0.0);
            state.v[i].assign(params[i]->numel(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw ShapeError("adam state does not match parameter list");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const std::vector<double>& g = p.grad();
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != p.numel()) throw ShapeError("adam state does not match parameter size");
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace edgehyb
