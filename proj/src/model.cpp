#include "edgehyb/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "edgehyb/errors.hpp"
#include "edgehyb/rng.hpp"

namespace edgehyb {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::TransposedConv: return "tconv";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Sigmoid: return "sigmoid";
    }
    return "?";
}

Tensor CnnModel::forward_train(const Tensor& x, ForwardCache& cache) {
    cache.inputs.assign(layers.size(), Tensor());
    cache.bn.assign(layers.size(), BatchNormCache());
    cache.pool_argmax.assign(layers.size(), {});
    Tensor cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Layer& l = layers[i];
        Tensor next;
        switch (l.kind) {
            case LayerKind::Conv: next = conv2d_forward(cur, l.conv); break;
            case LayerKind::TransposedConv: next = transposed_conv2d_forward(cur, l.conv); break;
            case LayerKind::BatchNorm: next = batchnorm_forward(cur, l.bn, Mode::Train, &cache.bn[i]); break;
            case LayerKind::Relu: next = relu(cur); break;
            case LayerKind::MaxPool: {
                MaxPoolResult r = maxpool2d(cur);
                next = std::move(r.y);
                cache.pool_argmax[i] = std::move(r.argmax);
                break;
            }
            case LayerKind::Sigmoid: next = sigmoid(cur); break;
        }
        cache.inputs[i] = std::move(cur);
        cur = std::move(next);
    }
    cache.output = cur;
    return cur;
}

Tensor CnnModel::forward_infer(const Tensor& x, std::size_t last) const {
    if (last >= layers.size()) throw ArgumentError("forward_infer: layer index out of range");
    Tensor cur = x;
    for (std::size_t i = 0; i <= last; ++i) {
        const Layer& l = layers[i];
        switch (l.kind) {
            case LayerKind::Conv: cur = conv2d_forward(cur, l.conv); break;
            case LayerKind::TransposedConv: cur = transposed_conv2d_forward(cur, l.conv); break;
            case LayerKind::BatchNorm: cur = batchnorm_infer(cur, l.bn); break;
            case LayerKind::Relu: cur = relu(cur); break;
            case LayerKind::MaxPool: cur = maxpool2d(cur).y; break;
            case LayerKind::Sigmoid: cur = sigmoid(cur); break;
        }
    }
    return cur;
}

namespace {

void accumulate(Tensor& param, const Tensor& grad) {
    std::vector<double>& g = param.grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
}

}  // namespace

Tensor CnnModel::backward(const Tensor& grad_out, const ForwardCache& cache) {
    if (cache.inputs.size() != layers.size()) throw ShapeError("backward: cache does not match the model");
    Tensor g = grad_out;
    for (std::size_t k = layers.size(); k-- > 0;) {
        Layer& l = layers[k];
        const Tensor& in = cache.inputs[k];
        switch (l.kind) {
            case LayerKind::Conv: {
                ConvGrads cg = conv2d_backward(g, in, l.conv);
                accumulate(l.conv.weights, cg.grad_w);
                accumulate(l.conv.bias, cg.grad_b);
                g = std::move(cg.grad_x);
                break;
            }
            case LayerKind::TransposedConv: {
                ConvGrads cg = transposed_conv2d_backward(g, in, l.conv);
                accumulate(l.conv.weights, cg.grad_w);
                accumulate(l.conv.bias, cg.grad_b);
                g = std::move(cg.grad_x);
                break;
            }
            case LayerKind::BatchNorm: {
                BatchNormGrads bg = batchnorm_backward(g, cache.bn[k], l.bn);
                accumulate(l.bn.gamma, bg.grad_gamma);
                accumulate(l.bn.beta, bg.grad_beta);
                g = std::move(bg.grad_x);
                break;
            }
            case LayerKind::Relu: g = relu_backward(g, in); break;
            case LayerKind::MaxPool: g = maxpool2d_backward(g, cache.pool_argmax[k], in.shape()); break;
            case LayerKind::Sigmoid: {
                // the sigmoid is always the last layer
                if (k + 1 != layers.size()) throw ShapeError("backward: sigmoid must be the final layer");
                g = sigmoid_backward(g, cache.output);
                break;
            }
        }
    }
    return g;
}

std::vector<Tensor*> CnnModel::parameters() {
    std::vector<Tensor*> out;
    for (Layer& l : layers) {
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::TransposedConv) {
            out.push_back(&l.conv.weights);
            out.push_back(&l.conv.bias);
        } else if (l.kind == LayerKind::BatchNorm) {
            out.push_back(&l.bn.gamma);
            out.push_back(&l.bn.beta);
        }
    }
    return out;
}

void CnnModel::zero_grad() {
    for (Tensor* t : parameters()) t->zero_grad();
}

std::size_t CnnModel::layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == name) return i;
    throw ArgumentError("no layer named " + name);
}

std::size_t CnnModel::feature_channels() const {
    // the tap is the ReLU of a conv block; its width is that block's conv output
    for (std::size_t i = feature_tap + 1; i-- > 0;) {
        const Layer& l = layers[i];
        if (l.kind == LayerKind::Conv) return l.conv.out_channels();
        if (l.kind == LayerKind::TransposedConv) return l.conv.in_channels();
    }
    throw ConfigError("feature tap is not preceded by a convolution");
}

CnnModel build_model(std::uint64_t seed) {
    Rng rng(seed);
    CnnModel m;
    auto block = [&](const std::string& name, const std::string& suffix, std::size_t in, std::size_t out,
                     bool up) {
        Layer conv{name, up ? LayerKind::TransposedConv : LayerKind::Conv, {}, {}};
        conv.conv = up ? make_conv(in, out, 4, 4, 2, 1, true, rng) : make_conv(out, in, 3, 3, 1, 1, false, rng);
        m.layers.push_back(std::move(conv));
        m.layers.push_back({"bn_" + suffix, LayerKind::BatchNorm, {}, BatchNormParams::make(out)});
        m.layers.push_back({"relu_" + suffix, LayerKind::Relu, {}, {}});
    };
    auto pool = [&](const std::string& name) { m.layers.push_back({name, LayerKind::MaxPool, {}, {}}); };

    block("conv_1", "1", 1, 16, false);
    block("conv_2", "2", 16, 16, false);
    pool("pool_1");
    block("conv_3", "3", 16, 32, false);
    pool("pool_2");
    block("conv_4", "4", 32, 64, false);
    block("up_5a", "5a", 64, 32, true);
    block("up_5b", "5b", 32, 16, true);
    block(kFeatureTapName, "6", 16, kFeatureChannels, false);
    m.feature_tap = m.layers.size() - 1;
    Layer head{"head", LayerKind::Conv, make_conv(1, kFeatureChannels, 1, 1, 1, 0, false, rng), {}};
    m.layers.push_back(std::move(head));
    m.layers.push_back({"sigmoid", LayerKind::Sigmoid, {}, {}});
    return m;
}

Tensor image_tensor(const GrayImage& img) {
    if (img.range != RangeTag::Unit) throw ArgumentError("model input must be unit-ranged");
    return Tensor({1, 1, static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)},
                  img.pixels);
}

namespace {

void require_model_size(const GrayImage& img) {
    if (img.height != kModelSize || img.width != kModelSize)
        throw ShapeError("model input must be " + std::to_string(kModelSize) + "x" +
                         std::to_string(kModelSize) + ", got " + std::to_string(img.height) + "x" +
                         std::to_string(img.width));
}

}  // namespace

EdgeMap forward_edge(const CnnModel& model, const GrayImage& img) {
    require_model_size(img);
    const Tensor y = model.forward_infer(image_tensor(img));
    EdgeMap e(img.height, img.width);
    std::copy(y.values().begin(), y.values().end(), e.confidence.begin());
    return e;
}

Tensor extract_features(const CnnModel& model, const GrayImage& img) {
    require_model_size(img);
    Tensor f = model.forward_infer(image_tensor(img), model.feature_tap);
    return f.reshaped({f.dim(1), f.dim(2), f.dim(3)});
}

Matrix flatten_features(const Tensor& fmap) {
    require_rank(fmap, 3, "flatten_features");
    if (fmap.dim(1) != static_cast<std::size_t>(kModelSize) || fmap.dim(2) != static_cast<std::size_t>(kModelSize))
        throw ShapeError("flatten_features expects a 256x256 map, got " + shape_string(fmap.shape()));
    const std::size_t C = fmap.dim(0);
    const std::size_t P = fmap.dim(1) * fmap.dim(2);
    Matrix m(P, C);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < P; ++r) m.data[r * C + c] = fmap[c * P + r];
    return m;
}

Tensor unflatten_features(const Matrix& flat, int height, int width) {
    const auto P = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (height < 1 || width < 1 || flat.rows != P)
        throw ShapeError("unflatten_features: row count does not match the grid");
    const std::size_t C = flat.cols;
    Tensor t({C, static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < P; ++r) t[c * P + r] = flat.data[r * C + c];
    return t;
}

// ---- training ----

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "iteration,loss,rmse\n";
    for (const TrainRecord& r : log.records)
        out << r.iteration << ',' << format_double(r.loss) << ',' << format_double(r.rmse) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

TrainLog train_cnn(CnnModel& model, const std::vector<TrainingSample>& data, const TrainConfig& cfg,
                   const TrainProgress& progress) {
    if (data.empty()) throw ArgumentError("train_cnn: empty dataset");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw ArgumentError("train_cnn: epochs and batch size must be positive");
    if (!(cfg.learning_rate >= 0.0)) throw ArgumentError("train_cnn: learning rate must be non-negative");
    if (cfg.checkpoint_interval < 0) throw ArgumentError("train_cnn: negative checkpoint interval");
    const int h = data.front().image.height;
    const int w = data.front().image.width;
    for (const TrainingSample& s : data) {
        if (s.image.range != RangeTag::Unit) throw ArgumentError("train_cnn: images must be unit-ranged");
        if (s.image.height != h || s.image.width != w || s.target.height != h || s.target.width != w)
            throw ShapeError("train_cnn: all images and targets must share one size");
    }

    Rng rng(cfg.seed);
    AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
    AdamState state;
    TrainLog log;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    long iteration = 0;
    ForwardCache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            Tensor x({n, 1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
            Tensor target(x.shape());
            for (std::size_t b = 0; b < n; ++b) {
                const TrainingSample& s = data[order[start + b]];
                std::copy(s.image.pixels.begin(), s.image.pixels.end(), x.values().begin() + b * plane);
                std::copy(s.target.data.begin(), s.target.data.end(), target.values().begin() + b * plane);
            }
            model.zero_grad();
            const Tensor pred = model.forward_train(x, cache);
            const LossResult lr = mse_loss(pred, target);
            model.backward(lr.grad, cache);
            std::vector<Tensor*> params = model.parameters();
            adam_step(params, state, adam);
            ++iteration;
            const TrainRecord rec{iteration, lr.loss, std::sqrt(lr.loss)};
            log.records.push_back(rec);
            if (progress) progress(rec);
            if (cfg.checkpoint_interval > 0 && iteration % cfg.checkpoint_interval == 0 &&
                !cfg.checkpoint_dir.empty()) {
                std::filesystem::create_directories(cfg.checkpoint_dir);
                save_checkpoint(cfg.checkpoint_dir / ("cnn_iter" + std::to_string(iteration) + ".ckpt"), model);
            }
        }
    }
    cache = ForwardCache();
    for (Tensor* t : model.parameters()) t->drop_grad();
    if (!cfg.log_path.empty()) write_train_log(cfg.log_path, log);
    return log;
}

// ---- checkpoints ----

namespace {

constexpr char kMagic[8] = {'E', 'H', 'C', 'N', 'N', 'C', 'K', '\0'};

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
    }
    template <typename T>
    void pod(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void tensor(const Tensor& t) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) pod<std::uint64_t>(d);
        out_.write(reinterpret_cast<const char*>(t.data().data()),
                   static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    void finish() {
        out_.flush();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot read " + path.string());
    }
    template <typename T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        check();
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        if (n > 4096) fail("string too long");
        std::string s(n, '\0');
        in_.read(s.data(), n);
        check();
        return s;
    }
    Tensor tensor() {
        const auto rank = pod<std::uint32_t>();
        if (rank > 8) fail("tensor rank too large");
        Shape shape(rank);
        for (auto& d : shape) d = pod<std::uint64_t>();
        const std::size_t n = shape_numel(shape);
        if (n > (std::size_t{1} << 28)) fail("tensor too large");
        std::vector<double> data(n);
        in_.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
        check();
        return Tensor(std::move(shape), std::move(data));
    }
    void raw(char* p, std::size_t n) {
        in_.read(p, static_cast<std::streamsize>(n));
        check();
    }
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    [[noreturn]] void fail(const std::string& why) {
        throw FormatError("bad checkpoint " + path_.string() + ": " + why);
    }

private:
    void check() {
        if (!in_) fail("truncated");
    }
    std::ifstream in_;
    std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CnnModel& model) {
    Writer w(path);
    w.raw(kMagic, sizeof kMagic);
    w.pod<std::uint32_t>(kCheckpointVersion);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
    w.pod<std::uint64_t>(model.feature_tap);
    for (const Layer& l : model.layers) {
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(l.kind));
        w.str(l.name);
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::TransposedConv) {
            w.pod<std::int32_t>(l.conv.stride);
            w.pod<std::int32_t>(l.conv.padding);
            w.tensor(l.conv.weights);
            w.tensor(l.conv.bias);
        } else if (l.kind == LayerKind::BatchNorm) {
            w.pod<double>(l.bn.eps);
            w.pod<double>(l.bn.momentum);
            w.tensor(l.bn.gamma);
            w.tensor(l.bn.beta);
            w.tensor(l.bn.running_mean);
            w.tensor(l.bn.running_var);
        }
    }
    w.finish();
}

CnnModel load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (!std::equal(magic, magic + 8, kMagic)) r.fail("not a checkpoint file");
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
    const auto count = r.pod<std::uint32_t>();
    if (count == 0 || count > 1024) r.fail("implausible layer count");
    CnnModel m;
    m.feature_tap = static_cast<std::size_t>(r.pod<std::uint64_t>());
    if (m.feature_tap >= count) r.fail("feature tap out of range");
    for (std::uint32_t i = 0; i < count; ++i) {
        Layer l;
        const auto kind = r.pod<std::uint32_t>();
        if (kind > static_cast<std::uint32_t>(LayerKind::Sigmoid)) r.fail("unknown layer kind");
        l.kind = static_cast<LayerKind>(kind);
        l.name = r.str();
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::TransposedConv) {
            l.conv.stride = r.pod<std::int32_t>();
            l.conv.padding = r.pod<std::int32_t>();
            l.conv.weights = r.tensor();
            l.conv.bias = r.tensor();
            if (l.conv.weights.rank() != 4 || l.conv.bias.rank() != 1) r.fail("bad convolution tensors");
        } else if (l.kind == LayerKind::BatchNorm) {
            l.bn.eps = r.pod<double>();
            l.bn.momentum = r.pod<double>();
            l.bn.gamma = r.tensor();
            l.bn.beta = r.tensor();
            l.bn.running_mean = r.tensor();
            l.bn.running_var = r.tensor();
        }
        m.layers.push_back(std::move(l));
    }
    if (!r.at_end()) r.fail("trailing bytes");
    return m;
}

}  // namespace edgehyb
