#include <gtest/gtest.h>

#include <cmath>

#include "edgehyb/errors.hpp"
#include "edgehyb/nn.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace edgehyb;

namespace {

ConvParams identity_1x1(std::size_t channels) {
    Rng rng(0);
    ConvParams p = make_conv(channels, channels, 1, 1, 1, 0, false, rng);
    for (std::size_t o = 0; o < channels; ++o)
        for (std::size_t i = 0; i < channels; ++i) p.weights.at(o, i, 0, 0) = o == i ? 1.0 : 0.0;
    return p;
}

}  // namespace

TEST(Tensor, ShapeAndGrad) {
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.numel(), 24u);
    EXPECT_FALSE(t.has_grad());
    t.grad()[5] = 1.0;
    EXPECT_TRUE(t.has_grad());
    EXPECT_EQ(t.grad().size(), t.numel());
    t.zero_grad();
    EXPECT_EQ(t.grad()[5], 0.0);
    EXPECT_THROW(t.reshaped({5, 5}), ShapeError);
    EXPECT_EQ(t.reshaped({4, 6}).numel(), 24u);
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Conv2d, OneByOneIdentity) {
    Rng rng(1);
    const Tensor x = oracle::random_tensor({2, 3, 5, 4}, rng);
    const ConvParams p = identity_1x1(3);
    EXPECT_EQ(conv2d_forward(x, p), x);
    const Tensor g = oracle::random_tensor(x.shape(), rng);
    EXPECT_EQ(conv2d_backward(g, x, p).grad_x, g);
    EXPECT_EQ(transposed_conv2d_forward(x, p), x);
}

TEST(Conv2d, ZeroWeightsGiveBias) {
    Rng rng(2);
    ConvParams p = make_conv(3, 2, 3, 3, 1, 1, false, rng);
    for (double& w : p.weights.values()) w = 0.0;
    p.bias.values() = {0.5, -1.0, 2.0};
    const Tensor y = conv2d_forward(oracle::random_tensor({1, 2, 5, 5}, rng), p);
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y.at(0, o, i, j), p.bias[o]);
}

TEST(Conv2d, FixedInstanceMatchesLoopOracle) {
    Rng rng(3);
    ConvParams p = make_conv(3, 2, 3, 3, 1, 1, false, rng);
    for (double& b : p.bias.values()) b = uniform_real(rng, -1, 1);
    const Tensor x = oracle::random_tensor({1, 2, 5, 5}, rng);
    const Tensor fast = conv2d_forward(x, p);
    const Tensor slow = oracle::conv2d(x, p.weights, p.bias, 1, 1);
    ASSERT_EQ(fast.shape(), slow.shape());
    EXPECT_LT(oracle::max_abs_diff(fast.data(), slow.data()), 1e-9);
}

TEST(Conv2d, RandomShapesMatchLoopOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 60; ++trial) {
        EXPECT_LT(gradcheck::conv_forward_error(rng, false), 1e-9);
        EXPECT_LT(gradcheck::conv_forward_error(rng, true), 1e-9);
    }
}

TEST(Conv2d, AdjointIdentity) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) EXPECT_LT(gradcheck::adjoint_error(rng), 1e-9);
}

TEST(Conv2d, ZeroUpstreamGivesZeroGradients) {
    Rng rng(6);
    ConvParams p = make_conv(2, 3, 3, 3, 2, 1, false, rng);
    const Tensor x = oracle::random_tensor({2, 3, 7, 7}, rng);
    const Tensor y = conv2d_forward(x, p);
    const ConvGrads g = conv2d_backward(Tensor(y.shape()), x, p);
    for (const Tensor* t : {&g.grad_x, &g.grad_w, &g.grad_b})
        for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, ShapeErrors) {
    Rng rng(7);
    const ConvParams p = make_conv(2, 3, 3, 3, 2, 0, false, rng);
    EXPECT_THROW(conv2d_forward(Tensor({1, 2, 7, 7}), p), ShapeError);  // channel mismatch
    EXPECT_THROW(conv2d_forward(Tensor({1, 3, 6, 6}), p), ShapeError);  // (6 - 3) / 2 not integral
    EXPECT_NO_THROW(conv2d_forward(Tensor({1, 3, 7, 7}), p));
    const ConvParams t = make_conv(2, 1, 3, 3, 1, 2, true, rng);
    EXPECT_THROW(transposed_conv2d_forward(Tensor({1, 2, 1, 1}), t), ShapeError);  // 0 + 3 - 4 <= 0
    EXPECT_THROW(conv2d_backward(Tensor({1, 2, 2, 2}), Tensor({1, 3, 7, 7}), p), ShapeError);
}

TEST(Conv2d, OutputSizes) {
    EXPECT_EQ(conv_output_size(256, 3, 1, 1), 256u);
    EXPECT_EQ(transposed_conv_output_size(64, 4, 2, 1), 128u);
    EXPECT_EQ(transposed_conv_output_size(5, 3, 2, 0), 11u);
}

TEST(Gradients, EveryLayerMatchesFiniteDifferences) {
    for (const auto& check : gradcheck::layer_checks()) {
        Rng rng(100);
        gradcheck::Outcome total;
        for (int instance = 0; instance < 20; ++instance) total.merge(check.run(rng));
        EXPECT_TRUE(total.ok()) << check.name << ": " << total.failures << " of " << total.entries
                                << " entries off, worst relative error " << total.worst;
    }
}

TEST(BatchNorm, TrainOutputIsStandardized) {
    Rng rng(8);
    const Tensor x = oracle::random_tensor({3, 2, 4, 5}, rng, -3, 5);
    BatchNormParams p = BatchNormParams::make(2);
    const Tensor y = batchnorm_forward(x, p, Mode::Train);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, sq = 0.0;
        const double n = 3 * 4 * 5;
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 5; ++j) {
                    mean += y.at(b, c, i, j);
                    sq += y.at(b, c, i, j) * y.at(b, c, i, j);
                }
        mean /= n;
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(sq / n - mean * mean, 1.0, 1e-4);
    }
}

TEST(BatchNorm, TrainMatchesTwoPassOracle) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor x = oracle::random_tensor({2, 3, 3, 4}, rng, -2, 2);
        BatchNormParams p = BatchNormParams::make(3);
        for (double& v : p.gamma.values()) v = uniform_real(rng, 0.5, 2);
        for (double& v : p.beta.values()) v = uniform_real(rng, -1, 1);
        const Tensor want = oracle::batchnorm_train(x, p);
        const Tensor got = batchnorm_forward(x, p, Mode::Train);
        EXPECT_LT(oracle::max_abs_diff(got.data(), want.data()), 1e-9);
    }
}

TEST(BatchNorm, RunningStatisticsUpdate) {
    Tensor x({2, 1, 1, 2}, std::vector<double>{1, 2, 3, 6});
    BatchNormParams p = BatchNormParams::make(1);
    batchnorm_forward(x, p, Mode::Train);
    // mean 3, unbiased variance (4 + 1 + 0 + 9) / 3
    EXPECT_NEAR(p.running_mean[0], 0.1 * 3.0, 1e-15);
    EXPECT_NEAR(p.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
}

TEST(BatchNorm, InferInvertsWithMatchingAffine) {
    Rng rng(10);
    const Tensor x = oracle::random_tensor({2, 3, 4, 4}, rng, -5, 5);
    BatchNormParams p = BatchNormParams::make(3);
    for (std::size_t c = 0; c < 3; ++c) {
        p.running_mean[c] = uniform_real(rng, -1, 1);
        p.running_var[c] = uniform_real(rng, 0.1, 3);
        p.gamma[c] = std::sqrt(p.running_var[c] + p.eps);
        p.beta[c] = p.running_mean[c];
    }
    const Tensor y = batchnorm_forward(x, p, Mode::Infer);
    EXPECT_LT(oracle::max_abs_diff(y.data(), x.data()), 1e-6);
    EXPECT_LT(oracle::max_abs_diff(batchnorm_infer(x, p).data(), oracle::batchnorm_infer(x, p).data()), 1e-12);
}

TEST(BatchNorm, InferWithZeroVarianceIsFinite) {
    BatchNormParams p = BatchNormParams::make(1);
    p.running_var[0] = 0.0;
    const Tensor y = batchnorm_infer(Tensor({1, 1, 2, 2}, 0.5), p);
    for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(BatchNorm, BackwardBasics) {
    Rng rng(11);
    const Tensor x = oracle::random_tensor({2, 2, 3, 3}, rng);
    BatchNormParams p = BatchNormParams::make(2);
    BatchNormCache cache;
    batchnorm_forward(x, p, Mode::Train, &cache);
    const BatchNormGrads zero = batchnorm_backward(Tensor(x.shape()), cache, p);
    for (double v : zero.grad_x.values()) EXPECT_EQ(v, 0.0);
    const Tensor g = oracle::random_tensor(x.shape(), rng);
    const BatchNormGrads grads = batchnorm_backward(g, cache, p);
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) s += g.at(n, c, i, j);
        EXPECT_NEAR(grads.grad_beta[c], s, 1e-12);
    }
}

TEST(Relu, Basics) {
    Rng rng(12);
    const Tensor neg = oracle::random_tensor({1, 2, 3, 3}, rng, -2, -0.1);
    const Tensor zeroed = relu(neg);
    for (double v : zeroed.values()) EXPECT_EQ(v, 0.0);
    const Tensor pos = oracle::random_tensor({1, 2, 3, 3}, rng, 0.1, 2);
    EXPECT_EQ(relu(pos), pos);
    const Tensor mixed = oracle::random_tensor({2, 2, 3, 3}, rng);
    const Tensor y = relu(mixed);
    const Tensor g = oracle::random_tensor(mixed.shape(), rng);
    const Tensor gx = relu_backward(g, mixed);
    for (std::size_t i = 0; i < mixed.numel(); ++i) {
        EXPECT_EQ(y[i], std::max(0.0, mixed[i]));
        EXPECT_EQ(gx[i], mixed[i] > 0.0 ? g[i] : 0.0);
    }
}

TEST(MaxPool, ConstantInputRoutesToFirstCell) {
    const Tensor x({1, 1, 4, 4}, 2.5);
    const MaxPoolResult r = maxpool2d(x);
    for (double v : r.y.values()) EXPECT_EQ(v, 2.5);
    const Tensor g = maxpool2d_backward(Tensor(r.y.shape(), 1.0), r.argmax, x.shape());
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g.at(0, 0, i, j), (i % 2 == 0 && j % 2 == 0) ? 1.0 : 0.0);
}

TEST(MaxPool, IncreasingRasterPicksBottomRight) {
    Tensor x({1, 1, 4, 6});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = static_cast<double>(i);
    const MaxPoolResult r = maxpool2d(x);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const std::size_t want = (2 * i + 1) * 6 + 2 * j + 1;
            EXPECT_EQ(r.argmax[i * 3 + j], want);
            EXPECT_EQ(r.y.at(0, 0, i, j), static_cast<double>(want));
        }
}

TEST(MaxPool, MatchesLoopOracle) {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor x = oracle::random_tensor({2, 3, 6, 8}, rng);
        EXPECT_EQ(maxpool2d(x).y, oracle::maxpool2(x));
    }
    EXPECT_THROW(maxpool2d(Tensor({1, 1, 3, 4})), ShapeError);
}

TEST(Mse, Basics) {
    Rng rng(14);
    const Tensor a = oracle::random_tensor({1, 1, 4, 4}, rng);
    EXPECT_EQ(mse_loss(a, a).loss, 0.0);
    Tensor b = a;
    for (double& v : b.values()) v -= 1.0;
    EXPECT_NEAR(mse_loss(a, b).loss, 1.0, 1e-15);
    const Tensor c = oracle::random_tensor(a.shape(), rng);
    double direct = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) direct += (a[i] - c[i]) * (a[i] - c[i]);
    const LossResult r = mse_loss(a, c);
    EXPECT_NEAR(r.loss, direct / 16.0, 1e-15);
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(r.grad[i], 2.0 * (a[i] - c[i]) / 16.0, 1e-15);
    EXPECT_THROW(mse_loss(a, Tensor({1, 1, 4, 5})), ShapeError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    Tensor p({3}, std::vector<double>{1, -2, 3});
    p.grad();
    AdamState state;
    std::vector<Tensor*> params{&p};
    adam_step(params, state, {});
    adam_step(params, state, {});
    EXPECT_EQ(p.values(), (std::vector<double>{1, -2, 3}));
    EXPECT_EQ(state.step, 2);
}

TEST(Adam, FirstStepClosedForm) {
    // m_hat = g and v_hat = g^2 after one step, so the move is lr * g / (|g| + eps)
    Tensor p({1}, std::vector<double>{0.7});
    p.grad()[0] = 0.3;
    AdamState state;
    std::vector<Tensor*> params{&p};
    const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
    adam_step(params, state, cfg);
    EXPECT_NEAR(p[0], 0.7 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
}

TEST(Adam, QuadraticDescends) {
    Tensor p({1}, std::vector<double>{3.0});
    AdamState state;
    std::vector<Tensor*> params{&p};
    const AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
    double prev = p[0] * p[0];
    for (int step = 0; step < 100; ++step) {
        p.grad()[0] = 2.0 * p[0];
        adam_step(params, state, cfg);
        const double now = p[0] * p[0];
        EXPECT_LT(now, prev);
        prev = now;
    }
    EXPECT_LT(prev, 9.0 * 0.5);
}

TEST(Determinism, RepeatedForwardIsIdentical) {
    Rng rng(15);
    ConvParams p = make_conv(4, 2, 3, 3, 1, 1, false, rng);
    const Tensor x = oracle::random_tensor({1, 2, 17, 9}, rng);
    EXPECT_EQ(conv2d_forward(x, p), conv2d_forward(x, p));
}

TEST(Init, KaimingBoundAndZeroBias) {
    Rng rng(16);
    const ConvParams p = make_conv(8, 4, 3, 3, 1, 1, false, rng);
    const double bound = std::sqrt(6.0 / (4 * 9));
    for (double w : p.weights.values()) EXPECT_LE(std::abs(w), bound);
    for (double b : p.bias.values()) EXPECT_EQ(b, 0.0);
    const ConvParams t = make_conv(8, 4, 4, 4, 2, 1, true, rng);
    EXPECT_EQ(t.bias.numel(), 4u);
}

TEST(Determinism, IndependentOfBufferPlacement) {
    Rng rng(17);
    for (const auto& [cout, cin] : {std::pair<std::size_t, std::size_t>{1, 16}, {16, 1}, {8, 4}}) {
        const ConvParams p = make_conv(cout, cin, 3, 3, 1, 1, false, rng);
        const ConvParams head = make_conv(cout, cin, 1, 1, 1, 0, false, rng);
        const Tensor x = oracle::random_tensor({1, cin, 20, 20}, rng);
        const Tensor g = oracle::random_tensor({1, cout, 20, 20}, rng);
        const ConvGrads want = conv2d_backward(g, x, p);
        const ConvGrads want_head = conv2d_backward(g, x, head);
        const Tensor y = conv2d_forward(x, head);
        std::vector<std::vector<double>> shims;
        for (std::size_t shift = 1; shift < 8; ++shift) {
            shims.emplace_back(shift * 3);  // moves where the next copies land
            const Tensor xs = x, gs = g;
            const ConvGrads got = conv2d_backward(gs, xs, p);
            EXPECT_EQ(got.grad_b, want.grad_b);
            EXPECT_EQ(got.grad_w, want.grad_w);
            EXPECT_EQ(got.grad_x, want.grad_x);
            const ConvGrads got_head = conv2d_backward(gs, xs, head);
            EXPECT_EQ(got_head.grad_b, want_head.grad_b);
            EXPECT_EQ(got_head.grad_w, want_head.grad_w);
            EXPECT_EQ(conv2d_forward(xs, head), y);
        }
    }
}
