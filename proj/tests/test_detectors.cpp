#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "edgehyb/detectors.hpp"
#include "edgehyb/errors.hpp"
#include "edgehyb/rng.hpp"

using namespace edgehyb;

namespace {

using DetectorFn = std::function<EdgeMap(const GrayImage&)>;

std::vector<std::pair<std::string, DetectorFn>> all_detectors() {
    return {{"sobel", [](const GrayImage& g) { return sobel(g); }},
            {"prewitt", [](const GrayImage& g) { return prewitt(g); }},
            {"roberts", [](const GrayImage& g) { return roberts(g); }},
            {"log", [](const GrayImage& g) { return log_detector(g); }},
            {"zerocross", [](const GrayImage& g) { return zerocross(g); }},
            {"canny", [](const GrayImage& g) { return canny(g); }}};
}

GrayImage vertical_step(int h, int w, int first_bright, double lo = 0.0, double hi = 1.0) {
    GrayImage img(h, w, RangeTag::Unit, lo);
    for (int r = 0; r < h; ++r)
        for (int c = first_bright; c < w; ++c) img(r, c) = hi;
    return img;
}

GrayImage random_unit(int h, int w, Rng& rng, double scale = 1.0) {
    GrayImage img(h, w, RangeTag::Unit);
    for (double& v : img.pixels) v = scale * uniform01(rng);
    return img;
}

GrayImage transposed(const GrayImage& img) {
    GrayImage t(img.width, img.height, img.range);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) t(c, r) = img(r, c);
    return t;
}

// 90 degrees counter-clockwise: (r, c) -> (w - 1 - c, r)
template <typename Map>
Map rotated(const Map& m) {
    Map out = m;
    out.height = m.width;
    out.width = m.height;
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) out(m.width - 1 - c, r) = m(r, c);
    return out;
}

std::set<std::size_t> argmax_set(const EdgeMap& e) {
    const double peak = *std::max_element(e.confidence.begin(), e.confidence.end());
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e.confidence[i] == peak) s.insert(i);
    return s;
}

}  // namespace

TEST(Detectors, ConstantImageGivesZeros) {
    for (double v : {0.0, 0.3, 1.0}) {
        const GrayImage img(17, 23, RangeTag::Unit, v);
        for (const auto& [name, fn] : all_detectors()) {
            const EdgeMap e = fn(img);
            ASSERT_EQ(e.height, 17) << name;
            ASSERT_EQ(e.width, 23) << name;
            for (double c : e.confidence) EXPECT_EQ(c, 0.0) << name << " at level " << v;
        }
    }
}

TEST(Detectors, RangeAndShapeOnRandomInput) {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage img = random_unit(19, 14, rng);
        for (const auto& [name, fn] : all_detectors()) {
            const EdgeMap e = fn(img);
            EXPECT_EQ(e.height, 19);
            EXPECT_EQ(e.width, 14);
            EXPECT_NO_THROW(validate(e)) << name;
        }
    }
}

TEST(Detectors, RejectRawInput) {
    const GrayImage raw(8, 8, RangeTag::Raw8, 10.0);
    for (const auto& [name, fn] : all_detectors()) EXPECT_THROW(fn(raw), ArgumentError) << name;
}

TEST(Sobel, VerticalStepPeaksBesideTheStep) {
    const EdgeMap e = sobel(vertical_step(12, 16, 8));
    // |gx| = 4 on columns 7 and 8, 0 elsewhere; normalized by the kernel pair's bound
    const double expect = 4.0 / max_gradient_magnitude(sobel_x(), sobel_y());
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 16; ++c) {
            if (c == 7 || c == 8)
                EXPECT_NEAR(e(r, c), expect, 1e-12);
            else
                EXPECT_EQ(e(r, c), 0.0);
        }
}

TEST(Sobel, TransposeCommutes) {
    Rng rng(12);
    const GrayImage img = random_unit(9, 13, rng);
    const EdgeMap a = sobel(transposed(img));
    const EdgeMap b = sobel(img);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 13; ++c) EXPECT_NEAR(a(c, r), b(r, c), 1e-12);
}

TEST(Gradients, NormalizationBoundMatchesAngularSweep) {
    // max over subsets of |sum v_i| equals max over directions u of sum max(0, u . v_i)
    auto sweep = [](const Kernel& kx, const Kernel& ky) {
        double best = 0.0;
        const int steps = 200000;
        for (int s = 0; s < steps; ++s) {
            const double t = 2.0 * M_PI * s / steps;
            double acc = 0.0;
            for (std::size_t i = 0; i < kx.weights.size(); ++i)
                acc += std::max(0.0, std::cos(t) * kx.weights[i] + std::sin(t) * ky.weights[i]);
            best = std::max(best, acc);
        }
        return best;
    };
    const double s = max_gradient_magnitude(sobel_x(), sobel_y());
    const double p = max_gradient_magnitude(prewitt_x(), prewitt_y());
    EXPECT_NEAR(s, sweep(sobel_x(), sobel_y()), 1e-6 * s);
    EXPECT_NEAR(p, sweep(prewitt_x(), prewitt_y()), 1e-6 * p);
    EXPECT_GT(s, 4.0);
}

TEST(Prewitt, VerticalStep) {
    const EdgeMap e = prewitt(vertical_step(10, 10, 5));
    const double expect = 3.0 / max_gradient_magnitude(prewitt_x(), prewitt_y());
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) EXPECT_NEAR(e(r, c), (c == 4 || c == 5) ? expect : 0.0, 1e-12);
}

TEST(Prewitt, RotationCommutes) {
    Rng rng(13);
    const GrayImage img = random_unit(8, 11, rng);
    const EdgeMap a = prewitt(rotated(img));
    const EdgeMap b = rotated(prewitt(img));
    ASSERT_EQ(a.height, b.height);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.confidence[i], b.confidence[i], 1e-12);
}

TEST(Roberts, DiagonalStep) {
    GrayImage img(10, 10, RangeTag::Unit);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) img(r, c) = c > r ? 1.0 : 0.0;
    const EdgeMap e = roberts(img);
    // away from the replicated last row and column only the cross difference fires
    double peak = 0.0;
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) peak = std::max(peak, e(r, c));
    EXPECT_GT(peak, 0.0);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            if (std::abs(c - r) > 1) {
                EXPECT_EQ(e(r, c), 0.0) << r << "," << c;
            }
            if (c == r && r < 9) {
                EXPECT_EQ(e(r, c), peak);
            }
        }
}

TEST(Roberts, SinglePixelLocality) {
    GrayImage img(9, 9, RangeTag::Unit);
    img(4, 4) = 1.0;
    const EdgeMap e = roberts(img);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            const bool inside = (r == 3 || r == 4) && (c == 3 || c == 4);
            if (inside)
                EXPECT_GT(e(r, c), 0.0);
            else
                EXPECT_EQ(e(r, c), 0.0);
        }
}

TEST(Log, StepCrossingSitsAtTheStep) {
    const EdgeMap e = log_detector(vertical_step(24, 24, 12), 2.0);
    for (std::size_t i : argmax_set(e)) {
        const int c = static_cast<int>(i % 24);
        EXPECT_TRUE(c == 11 || c == 12) << c;
    }
    // every row has its strongest response on the step columns
    for (int r = 0; r < 24; ++r) {
        int best = 0;
        for (int c = 1; c < 24; ++c)
            if (e(r, c) > e(r, best)) best = c;
        EXPECT_TRUE(best == 11 || best == 12);
    }
}

TEST(Log, ContrastDoublingKeepsArgmax) {
    Rng rng(14);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage img = random_unit(16, 16, rng, 0.5);
        GrayImage twice = img;
        for (double& v : twice.pixels) v *= 2.0;
        EXPECT_EQ(argmax_set(log_detector(img)), argmax_set(log_detector(twice)));
    }
}

TEST(Log, RejectsBadSigma) {
    const GrayImage img(8, 8, RangeTag::Unit, 0.5);
    EXPECT_THROW(log_detector(img, 0.0), ArgumentError);
    EXPECT_THROW(log_detector(img, -1.0), ArgumentError);
}

TEST(Log, KernelHasZeroSum) {
    for (double s : {0.5, 1.0, 2.0, 3.3}) {
        const Kernel k = log_kernel(s);
        double sum = 0.0;
        for (double v : k.weights) sum += v;
        EXPECT_NEAR(sum, 0.0, 1e-12);
        EXPECT_EQ(k.rows, 2 * static_cast<int>(std::ceil(3 * s)) + 1);
    }
}

TEST(Zerocross, StepCrossingSitsAtTheStep) {
    // the Laplacian of a clean step is +1 / -1 on the two step columns
    const EdgeMap e = zerocross(vertical_step(10, 12, 6));
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 12; ++c) EXPECT_EQ(e(r, c), (c == 5 || c == 6) ? 1.0 : 0.0) << r << "," << c;
}

TEST(Zerocross, ContrastDoublingKeepsArgmax) {
    Rng rng(15);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage img = random_unit(12, 12, rng, 0.5);
        GrayImage twice = img;
        for (double& v : twice.pixels) v *= 2.0;
        EXPECT_EQ(argmax_set(zerocross(img)), argmax_set(zerocross(twice)));
    }
}

TEST(Zerocross, CustomKernel) {
    const GrayImage img = vertical_step(8, 8, 4);
    const Kernel horizontal(1, 3, {1, -2, 1});
    const EdgeMap a = zerocross(img, horizontal);
    const EdgeMap b = zerocross(img);
    EXPECT_EQ(a.confidence, b.confidence);
}

TEST(ZeroCrossings, OpposingAndAdjacentPairs) {
    RealMap m(1, 5);
    m.data = {0.0, 2.0, 0.0, -1.0, 0.0};
    // pixel 2 sees 2 and -1 across it; pixels 1 and 3 are not adjacent to each other
    const EdgeMap e = zero_crossings(m);
    EXPECT_EQ(e.confidence, (std::vector<double>{0, 0, 1, 0, 0}));
    m.data = {1.0, -3.0, 0.0, 0.0, 0.0};
    const EdgeMap f = zero_crossings(m);
    EXPECT_EQ(f.confidence, (std::vector<double>{1, 1, 0, 0, 0}));
}

TEST(Canny, CleanVerticalStepIsOnePixelWide) {
    const GrayImage img = vertical_step(32, 32, 16);
    const EdgeMap e = canny(img);
    std::set<int> columns;
    for (int r = 0; r < 32; ++r) {
        int count = 0;
        for (int c = 0; c < 32; ++c)
            if (e(r, c) == 1.0) {
                ++count;
                columns.insert(c);
            }
        EXPECT_EQ(count, 1) << "row " << r;
    }
    ASSERT_EQ(columns.size(), 1u);
    EXPECT_TRUE(*columns.begin() == 15 || *columns.begin() == 16);
}

TEST(Canny, WeakSpeckleIsSuppressed) {
    GrayImage img = vertical_step(32, 32, 16, 0.2, 0.8);
    img(6, 5) += 0.01;
    const EdgeMap e = canny(img);
    const EdgeMap clean = canny(vertical_step(32, 32, 16, 0.2, 0.8));
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 12; ++c) EXPECT_EQ(e(r, c), 0.0);
    EXPECT_EQ(e.confidence, clean.confidence);
}

TEST(Canny, OutputIsBinary) {
    Rng rng(16);
    const EdgeMap e = canny(random_unit(20, 20, rng));
    for (double v : e.confidence) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(Canny, NoStrongerNeighbourAlongGradient) {
    Rng rng(17);
    const CannyParams params;
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage img = random_unit(24, 24, rng);
        const EdgeMap e = canny(img, params);
        const RealMap smooth = convolve2d(img.as_real_map(), gaussian_kernel(params.sigma));
        const RealMap gx = convolve2d(smooth, sobel_x()), gy = convolve2d(smooth, sobel_y());
        auto mag = [&](int r, int c) {
            if (r < 0 || c < 0 || r >= 24 || c >= 24) return 0.0;
            return std::hypot(gx(r, c), gy(r, c));
        };
        for (int r = 0; r < 24; ++r)
            for (int c = 0; c < 24; ++c) {
                if (e(r, c) != 1.0) continue;
                double a = std::atan2(gy(r, c), gx(r, c)) * 180.0 / M_PI;
                if (a < 0) a += 180.0;
                const int k = a < 22.5 || a >= 157.5 ? 0 : a < 67.5 ? 1 : a < 112.5 ? 2 : 3;
                const int dr[] = {0, 1, 1, 1}, dc[] = {1, 1, 0, -1};
                EXPECT_GE(mag(r, c), mag(r + dr[k], c + dc[k]));
                EXPECT_GE(mag(r, c), mag(r - dr[k], c - dc[k]));
            }
    }
}

TEST(Canny, RejectsBadParameters) {
    const GrayImage img(8, 8, RangeTag::Unit, 0.5);
    EXPECT_THROW(canny(img, {1.4, 0.0, 0.8}), ArgumentError);
    EXPECT_THROW(canny(img, {1.4, 1.0, 0.8}), ArgumentError);
    EXPECT_THROW(canny(img, {1.4, 0.4, 0.0}), ArgumentError);
    EXPECT_THROW(canny(img, {1.4, 0.4, 1.0}), ArgumentError);
    EXPECT_THROW(canny(img, {0.0, 0.4, 0.8}), ArgumentError);
}

TEST(Gradients, ContrastScalingKeepsArgmax) {
    Rng rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        const GrayImage img = random_unit(15, 15, rng, 0.5);
        GrayImage twice = img;
        for (double& v : twice.pixels) v *= 2.0;
        EXPECT_EQ(argmax_set(sobel(img)), argmax_set(sobel(twice)));
        EXPECT_EQ(argmax_set(prewitt(img)), argmax_set(prewitt(twice)));
        EXPECT_EQ(argmax_set(roberts(img)), argmax_set(roberts(twice)));
    }
}

TEST(Gaussian, Normalized) {
    const Kernel k = gaussian_kernel(1.4);
    double sum = 0.0;
    for (double v : k.weights) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(k.rows, 11);
    EXPECT_THROW(gaussian_kernel(0.0), ArgumentError);
}
