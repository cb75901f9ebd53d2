#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include "edgehyb/errors.hpp"
#include "edgehyb/fixture.hpp"
#include "edgehyb/morphology.hpp"
#include "edgehyb/pipeline.hpp"

using namespace edgehyb;
namespace fs = std::filesystem;

namespace {

HybridDetector seeded_detector(std::uint64_t seed) {
    HybridDetector det;
    det.cnn = build_model(seed);
    Rng rng(seed + 1);
    det.svm.w.resize(kFeatureChannels);
    for (double& w : det.svm.w) w = uniform_real(rng, -1, 1);
    det.svm.b = -0.2;
    det.calibration = {-0.5, 0.5};
    return det;
}

GrayImage scene_image(int h, int w, std::uint64_t seed) {
    FixtureOptions opts;
    opts.height = h;
    opts.width = w;
    return make_scene(opts, seed).image;
}

// Sort-based percentile with linear interpolation between order statistics.
double percentile_oracle(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double frac = pos - i;
    return v[i] * (1 - frac) + v[i + 1] * frac;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Calibration, ApplyRule) {
    const ScoreCalibration cal{-1.0, 3.0};
    EXPECT_EQ(cal.apply(-1.0), 0.0);
    EXPECT_EQ(cal.apply(3.0), 1.0);
    EXPECT_EQ(cal.apply(1.0), 0.5);
    EXPECT_EQ(cal.apply(-7.0), 0.0);
    EXPECT_EQ(cal.apply(9.0), 1.0);
    const ScoreCalibration flat{2.0, 2.0};
    for (double s : {-1.0, 2.0, 5.0}) EXPECT_EQ(flat.apply(s), 0.5);
}

TEST(Calibration, PercentilesMatchSortOracle) {
    Rng rng(1);
    for (std::size_t n : {1u, 2u, 7u, 100u, 1001u}) {
        std::vector<double> v(n);
        for (double& x : v) x = normal01(rng) * 3.0;
        const ScoreCalibration cal = fit_calibration(v);
        EXPECT_DOUBLE_EQ(cal.lo, percentile_oracle(v, 0.01)) << n;
        EXPECT_DOUBLE_EQ(cal.hi, percentile_oracle(v, 0.99)) << n;
    }
    const ScoreCalibration constant = fit_calibration(std::vector<double>(50, 4.0));
    EXPECT_EQ(constant.apply(4.0), 0.5);
    EXPECT_EQ(constant.apply(100.0), 0.5);
    EXPECT_THROW(fit_calibration({}), ArgumentError);
}

TEST(Calibration, Monotone) {
    Rng rng(2);
    std::vector<double> s(500);
    for (double& x : s) x = normal01(rng);
    const ScoreCalibration cal = fit_calibration(s);
    std::sort(s.begin(), s.end());
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(cal.apply(s[i - 1]), cal.apply(s[i]));
}

TEST(Pipeline, ZeroSvmGivesUniformMap) {
    HybridDetector det = seeded_detector(3);
    std::fill(det.svm.w.begin(), det.svm.w.end(), 0.0);
    det.svm.b = 0.0;
    const EdgeMap e = detect_hybrid(det, scene_image(96, 120, 4));
    ASSERT_EQ(e.height, 256);
    ASSERT_EQ(e.width, 256);
    for (double v : e.confidence) EXPECT_EQ(v, det.calibration.apply(0.0));
}

TEST(Pipeline, OutputIsAlways256) {
    const HybridDetector det = seeded_detector(5);
    for (const auto& [h, w] : {std::pair{40, 300}, {256, 256}, {311, 97}}) {
        const EdgeMap e = detect_hybrid(det, scene_image(h, w, 6));
        EXPECT_EQ(e.height, 256);
        EXPECT_EQ(e.width, 256);
        for (double v : e.confidence) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Pipeline, EqualsStepByStepComposition) {
    HybridDetector det = seeded_detector(7);
    det.svm.feature_mean.assign(kFeatureChannels, 0.1);
    det.svm.feature_scale.assign(kFeatureChannels, 2.0);
    const GrayImage raw = scene_image(200, 180, 8);

    const GrayImage unit = normalize_unit(resize_bilinear(raw, 256, 256));
    const Matrix flat = flatten_features(extract_features(det.cnn, unit));
    const std::vector<double> scores = decision_values(det.svm, flat);
    EdgeMap manual(256, 256);
    for (std::size_t r = 0; r < scores.size(); ++r) manual(r / 256, r % 256) = det.calibration.apply(scores[r]);

    EXPECT_EQ(hybrid_scores(det, raw), scores);
    EXPECT_EQ(detect_hybrid(det, raw).confidence, manual.confidence);

    det.postprocess = true;
    EXPECT_EQ(detect_hybrid(det, raw).confidence, postprocess_morphological(manual, det.min_component).confidence);

    det.postprocess = false;
    const EdgeMap hard = detect_hybrid_binary(det, raw);
    for (std::size_t r = 0; r < scores.size(); ++r) EXPECT_EQ(hard.confidence[r], scores[r] > 0.0 ? 1.0 : 0.0);
}

TEST(Pipeline, MonotoneInScore) {
    const HybridDetector det = seeded_detector(9);
    const GrayImage raw = scene_image(256, 256, 10);
    const std::vector<double> s = hybrid_scores(det, raw);
    const EdgeMap e = detect_hybrid(det, raw);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    for (std::size_t i = 1; i < order.size(); ++i)
        ASSERT_LE(e.confidence[order[i - 1]], e.confidence[order[i]]);
}

TEST(Pipeline, PostprocessInvariant) {
    HybridDetector det = seeded_detector(11);
    det.postprocess = true;
    det.calibration = fit_calibration(hybrid_scores(det, scene_image(256, 256, 12)));
    const GrayImage raw = scene_image(256, 256, 13);
    det.postprocess = false;
    const EdgeMap soft = detect_hybrid(det, raw);
    det.postprocess = true;
    const EdgeMap post = detect_hybrid(det, raw);
    std::vector<int> labels;
    const BinaryMap before = binarize(soft, 0.5);
    const auto sizes = label_components(before, labels);
    const BinaryMap after = binarize(post, 0.5);
    EXPECT_GT(after.count(), 0u);
    for (std::size_t i = 0; i < after.bits.size(); ++i) {
        if (!after.bits[i]) continue;
        EXPECT_GE(sizes[labels[i]], det.min_component);
        EXPECT_EQ(post.confidence[i], soft.confidence[i]);
    }
    EXPECT_EQ(thin(after).bits, after.bits);
}

TEST(Pipeline, CalibrationIsDeterministic) {
    const HybridDetector det = seeded_detector(14);
    const std::vector<GrayImage> imgs{scene_image(256, 256, 15), scene_image(128, 128, 16)};
    const HybridDetector a = calibrate_scores(det, imgs), b = calibrate_scores(det, imgs);
    EXPECT_EQ(a.calibration.lo, b.calibration.lo);
    EXPECT_EQ(a.calibration.hi, b.calibration.hi);
    std::vector<double> all = hybrid_scores(det, imgs[0]);
    const std::vector<double> more = hybrid_scores(det, imgs[1]);
    all.insert(all.end(), more.begin(), more.end());
    EXPECT_DOUBLE_EQ(a.calibration.lo, percentile_oracle(all, 0.01));
    EXPECT_DOUBLE_EQ(a.calibration.hi, percentile_oracle(all, 0.99));
    EXPECT_THROW(calibrate_scores(det, {}), ArgumentError);
}

TEST(Pipeline, WidthMismatchIsConfigError) {
    HybridDetector det = seeded_detector(17);
    det.svm.w.resize(8);
    EXPECT_THROW(det.check(), ConfigError);
    EXPECT_THROW(detect_hybrid(det, scene_image(64, 64, 1)), ConfigError);
}

TEST(Pipeline, ReshapeRowOrder) {
    std::vector<double> v(12);
    std::iota(v.begin(), v.end(), 0.0);
    const EdgeMap e = reshape_scores(v, 3, 4);
    EXPECT_EQ(e(0, 3), 3.0);
    EXPECT_EQ(e(2, 1), 9.0);
    EXPECT_THROW(reshape_scores(v, 4, 4), ShapeError);
}

TEST(Bundle, RoundTrip) {
    const fs::path dir = fs::temp_directory_path() / "edgehyb_test_bundle";
    fs::remove_all(dir);
    HybridDetector det = seeded_detector(18);
    det.svm.feature_mean.assign(kFeatureChannels, 0.0);
    det.svm.feature_scale.assign(kFeatureChannels, 1.5);
    det.calibration = {-0.25, 0.75};
    save_bundle(dir, det);
    for (const char* f : {"manifest.json", "cnn.ckpt", "svm.json", "calibration.json"}) EXPECT_TRUE(fs::exists(dir / f));
    const HybridDetector back = load_bundle(dir);
    EXPECT_EQ(back.svm.w, det.svm.w);
    EXPECT_EQ(back.calibration.lo, det.calibration.lo);
    EXPECT_EQ(back.calibration.hi, det.calibration.hi);
    const GrayImage raw = scene_image(256, 256, 19);
    EXPECT_EQ(detect_hybrid(back, raw).confidence, detect_hybrid(det, raw).confidence);

    const fs::path again = fs::temp_directory_path() / "edgehyb_test_bundle2";
    fs::remove_all(again);
    save_bundle(again, back);
    for (const char* f : {"manifest.json", "cnn.ckpt", "svm.json", "calibration.json"})
        EXPECT_EQ(file_bytes(dir / f), file_bytes(again / f)) << f;

    fs::remove(again / "svm.json");
    EXPECT_THROW(load_bundle(again), IoError);
}
