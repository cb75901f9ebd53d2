#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "edgehyb/errors.hpp"
#include "edgehyb/model.hpp"
#include "oracles.hpp"

using namespace edgehyb;
namespace fs = std::filesystem;

namespace {

GrayImage random_unit(int size, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(size, size, RangeTag::Unit);
    for (double& p : img.pixels) p = uniform01(rng);
    return img;
}

// Bright square on a dark background; the target marks its one-pixel outline.
TrainingSample square_sample(int size) {
    TrainingSample s{GrayImage(size, size, RangeTag::Unit, 0.2), RealMap(size, size)};
    const int lo = size / 4, hi = 3 * size / 4;
    for (int r = lo; r < hi; ++r)
        for (int c = lo; c < hi; ++c) {
            s.image(r, c) = 0.8;
            if (r == lo || r == hi - 1 || c == lo || c == hi - 1) s.target(r, c) = 1.0;
        }
    return s;
}

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "edgehyb_test_model";
    fs::create_directories(dir);
    return dir / name;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Model, LayerShapes) {
    const CnnModel m = build_model(1);
    const Tensor x = image_tensor(random_unit(kModelSize, 2));
    const std::vector<std::pair<std::string, Shape>> want{
        {"conv_1", {1, 16, 256, 256}}, {"conv_2", {1, 16, 256, 256}}, {"pool_1", {1, 16, 128, 128}},
        {"conv_3", {1, 32, 128, 128}}, {"pool_2", {1, 32, 64, 64}},   {"conv_4", {1, 64, 64, 64}},
        {"up_5a", {1, 32, 128, 128}},  {"up_5b", {1, 16, 256, 256}},  {"conv_6", {1, 16, 256, 256}},
        {"head", {1, 1, 256, 256}}};
    for (const auto& [name, shape] : want) {
        const Tensor y = m.forward_infer(x, m.layer_index(name));
        EXPECT_EQ(y.shape(), shape) << name;
    }
    EXPECT_EQ(m.feature_channels(), static_cast<std::size_t>(kFeatureChannels));
    EXPECT_EQ(m.layers[m.feature_tap].kind, LayerKind::Relu);
    EXPECT_THROW(m.layer_index("conv_9"), ArgumentError);
}

TEST(Model, SameSeedSameWeights) {
    CnnModel a = build_model(11), b = build_model(11), c = build_model(12);
    const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(*pa[i], *pb[i]);
        differs = differs || !(*pa[i] == *pc[i]);
    }
    EXPECT_TRUE(differs);
}

TEST(Model, HeadIsStrictlyInsideUnitInterval) {
    const CnnModel m = build_model(3);
    const EdgeMap e = forward_edge(m, random_unit(kModelSize, 4));
    ASSERT_EQ(e.height, kModelSize);
    for (double v : e.confidence) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Model, ForwardMatchesLoopOracle) {
    CnnModel m = build_model(5);
    Rng rng(6);
    // non-trivial running statistics so the batch norm layers do something
    for (Layer& L : m.layers)
        if (L.kind == LayerKind::BatchNorm)
            for (std::size_t c = 0; c < L.bn.channels(); ++c) {
                L.bn.running_mean[c] = uniform_real(rng, -0.2, 0.2);
                L.bn.running_var[c] = uniform_real(rng, 0.5, 2.0);
                L.bn.beta[c] = uniform_real(rng, -0.1, 0.1);
            }
    const Tensor x = oracle::random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0);
    const Tensor fast = m.forward_infer(x);
    const Tensor slow = oracle::model_forward(m, x, m.layers.size() - 1);
    ASSERT_EQ(fast.shape(), slow.shape());
    EXPECT_LT(oracle::max_abs_diff(fast.data(), slow.data()), 1e-9);
}

TEST(Model, FlattenRowOrder) {
    Rng rng(7);
    const Tensor f = oracle::random_tensor({16, 256, 256}, rng);
    const Matrix flat = flatten_features(f);
    ASSERT_EQ(flat.rows, 65536u);
    ASSERT_EQ(flat.cols, 16u);
    for (std::size_t c = 0; c < 16; ++c) {
        EXPECT_EQ(flat(257, c), f[(c * 256 + 1) * 256 + 1]);
        EXPECT_EQ(flat(256 * 255 + 3, c), f[(c * 256 + 255) * 256 + 3]);
    }
    const Tensor back = unflatten_features(flat, 256, 256);
    EXPECT_EQ(back.values(), f.values());
    EXPECT_THROW(flatten_features(Tensor({16, 128, 256})), ShapeError);
    EXPECT_THROW(unflatten_features(flat, 128, 256), ShapeError);
}

TEST(Model, FeatureTapMatchesPrefixForward) {
    const CnnModel m = build_model(8);
    const GrayImage img = random_unit(kModelSize, 9);
    const Tensor f = extract_features(m, img);
    ASSERT_EQ(f.shape(), (Shape{16, 256, 256}));
    const Tensor y = m.forward_infer(image_tensor(img), m.layer_index("conv_6") + 2);
    EXPECT_EQ(f.values(), y.values());
    for (double v : f.values()) EXPECT_GE(v, 0.0);
}

TEST(Model, RejectsWrongInput) {
    const CnnModel m = build_model(1);
    EXPECT_THROW(forward_edge(m, random_unit(128, 1)), ShapeError);
    EXPECT_THROW(extract_features(m, random_unit(255, 1)), ShapeError);
    GrayImage raw(kModelSize, kModelSize, RangeTag::Raw8, 10.0);
    EXPECT_THROW(forward_edge(m, raw), ArgumentError);
}

TEST(Model, CheckpointRoundTrip) {
    CnnModel m = build_model(21);
    const std::vector<TrainingSample> data{square_sample(32)};
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 1;
    train_cnn(m, data, cfg);
    const fs::path p = temp_path("round.ckpt");
    save_checkpoint(p, m);
    const CnnModel back = load_checkpoint(p);
    ASSERT_EQ(back.layers.size(), m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        EXPECT_EQ(back.layers[l].name, m.layers[l].name);
        EXPECT_EQ(back.layers[l].conv.weights, m.layers[l].conv.weights);
        EXPECT_EQ(back.layers[l].conv.bias, m.layers[l].conv.bias);
        EXPECT_EQ(back.layers[l].bn.running_mean, m.layers[l].bn.running_mean);
        EXPECT_EQ(back.layers[l].bn.running_var, m.layers[l].bn.running_var);
        EXPECT_EQ(back.layers[l].bn.gamma, m.layers[l].bn.gamma);
    }
    const GrayImage img = random_unit(kModelSize, 22);
    EXPECT_EQ(forward_edge(back, img).confidence, forward_edge(m, img).confidence);
    const fs::path again = temp_path("again.ckpt");
    save_checkpoint(again, back);
    EXPECT_EQ(file_bytes(p), file_bytes(again));
}

TEST(Model, CorruptCheckpointsAreRejected) {
    const fs::path p = temp_path("good.ckpt");
    save_checkpoint(p, build_model(1));
    const std::string bytes = file_bytes(p);
    const fs::path bad = temp_path("bad.ckpt");
    {
        std::ofstream out(bad, std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    EXPECT_THROW(load_checkpoint(bad), FormatError);
    {
        std::ofstream out(bad, std::ios::binary);
        out << "not a checkpoint at all";
    }
    EXPECT_THROW(load_checkpoint(bad), FormatError);
    EXPECT_THROW(load_checkpoint(temp_path("missing.ckpt")), IoError);
}

TEST(Training, ZeroLearningRateKeepsWeights) {
    CnnModel m = build_model(31);
    const CnnModel before = m;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.0;
    train_cnn(m, {square_sample(32), square_sample(32)}, cfg);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        EXPECT_EQ(m.layers[l].conv.weights, before.layers[l].conv.weights);
        EXPECT_EQ(m.layers[l].conv.bias, before.layers[l].conv.bias);
        EXPECT_EQ(m.layers[l].bn.gamma, before.layers[l].bn.gamma);
        EXPECT_EQ(m.layers[l].bn.beta, before.layers[l].bn.beta);
    }
}

TEST(Training, ArgumentErrors) {
    CnnModel m = build_model(1);
    TrainConfig cfg;
    EXPECT_THROW(train_cnn(m, {}, cfg), ArgumentError);
    cfg.epochs = 0;
    EXPECT_THROW(train_cnn(m, {square_sample(16)}, cfg), ArgumentError);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    EXPECT_THROW(train_cnn(m, {square_sample(16)}, cfg), ArgumentError);
    cfg.batch_size = 1;
    cfg.learning_rate = -1.0;
    EXPECT_THROW(train_cnn(m, {square_sample(16)}, cfg), ArgumentError);
    cfg.learning_rate = 1e-3;
    EXPECT_THROW(train_cnn(m, {square_sample(16), square_sample(32)}, cfg), ShapeError);
}

TEST(Training, LoggedRmseIsRootOfLoss) {
    CnnModel m = build_model(41);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.log_path = temp_path("train_log.csv");
    const TrainLog log = train_cnn(m, {square_sample(32), square_sample(32), square_sample(32)}, cfg);
    ASSERT_EQ(log.records.size(), 6u);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        EXPECT_EQ(log.records[i].iteration, static_cast<long>(i + 1));
        EXPECT_NEAR(log.records[i].rmse * log.records[i].rmse, log.records[i].loss, 1e-12);
    }
    EXPECT_TRUE(fs::exists(cfg.log_path));
}

TEST(Training, SameSeedSameLogAndWeights) {
    const std::vector<TrainingSample> data{square_sample(32), square_sample(32)};
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 1;
    cfg.seed = 5;
    CnnModel a = build_model(51), b = build_model(51);
    const TrainLog la = train_cnn(a, data, cfg), lb = train_cnn(b, data, cfg);
    ASSERT_EQ(la.records.size(), lb.records.size());
    for (std::size_t i = 0; i < la.records.size(); ++i) EXPECT_EQ(la.records[i].loss, lb.records[i].loss);
    save_checkpoint(temp_path("a.ckpt"), a);
    save_checkpoint(temp_path("b.ckpt"), b);
    EXPECT_EQ(file_bytes(temp_path("a.ckpt")), file_bytes(temp_path("b.ckpt")));
}

TEST(Training, CheckpointsAtInterval) {
    const fs::path dir = temp_path("ckpts");
    fs::remove_all(dir);
    CnnModel m = build_model(61);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 1;
    cfg.checkpoint_interval = 2;
    cfg.checkpoint_dir = dir;
    train_cnn(m, {square_sample(16)}, cfg);
    EXPECT_TRUE(fs::exists(dir / "cnn_iter2.ckpt"));
    EXPECT_TRUE(fs::exists(dir / "cnn_iter4.ckpt"));
    EXPECT_FALSE(fs::exists(dir / "cnn_iter3.ckpt"));
}

TEST(Training, OverfitsOneSample) {
    CnnModel m = build_model(71);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 1;
    const TrainLog log = train_cnn(m, {square_sample(64)}, cfg);
    ASSERT_EQ(log.records.size(), 500u);
    const double first = log.records.front().loss;
    EXPECT_LT(log.records.back().loss, 0.25 * first);
    // 20-iteration moving average never rises after iteration 50
    auto window = [&](std::size_t end) {
        double s = 0.0;
        for (std::size_t i = end - 20; i < end; ++i) s += log.records[i].loss;
        return s / 20.0;
    };
    for (std::size_t end = 70; end <= 500; ++end) EXPECT_LE(window(end), window(end - 1) * (1.0 + 1e-9)) << end;
}
