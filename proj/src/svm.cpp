#include "edgehyb/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "edgehyb/errors.hpp"
#include "edgehyb/rng.hpp"

namespace edgehyb {

namespace {

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t n, Rng& rng) {
    n = std::min(n, pool.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

// Standardized copy of one feature row.
void standardize_into(const SvmModel& m, std::span<const double> x, std::vector<double>& z) {
    z.resize(x.size());
    if (m.feature_mean.empty()) {
        std::copy(x.begin(), x.end(), z.begin());
        return;
    }
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - m.feature_mean[j]) / m.feature_scale[j];
}

}  // namespace

PixelDraw sample_training_pixels(const Matrix& fmat, std::span<const std::uint8_t> gt, std::size_t n_per_class,
                                 std::uint64_t seed) {
    if (n_per_class < 1) throw ArgumentError("n_per_class must be at least 1");
    if (gt.size() != fmat.rows) throw ShapeError("ground truth size does not match the feature rows");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < gt.size(); ++i) (gt[i] ? pos : neg).push_back(i);
    PixelDraw draw;
    if (pos.empty()) {
        draw.warnings = 1;
        return draw;
    }
    if (neg.empty()) draw.warnings = 1;
    Rng rng(seed);
    for (int label : {+1, -1}) {
        for (std::size_t r : draw_without_replacement(label > 0 ? pos : neg, n_per_class, rng)) {
            const auto row = fmat.row(r);
            draw.samples.push_back({std::vector<double>(row.begin(), row.end()), label});
        }
    }
    return draw;
}

SvmFit train_svm(std::span<const PixelSample> samples, const SvmOptions& opts) {
    if (!(opts.lambda > 0.0)) throw ArgumentError("lambda must be positive");
    if (opts.max_epochs < 1) throw ArgumentError("max_epochs must be positive");
    if (!(opts.tol > 0.0)) throw ArgumentError("tol must be positive");
    if (samples.empty()) throw TrainingError("no training samples");
    const std::size_t d = samples.front().feature.size();
    bool has_pos = false;
    bool has_neg = false;
    for (const PixelSample& s : samples) {
        if (s.feature.size() != d) throw ShapeError("training samples differ in feature length");
        if (s.label == 1) has_pos = true;
        else if (s.label == -1) has_neg = true;
        else throw ArgumentError("labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw TrainingError("SVM training needs both edge and non-edge samples");

    const std::size_t n = samples.size();
    SvmFit fit;
    SvmModel& m = fit.model;
    m.lambda = opts.lambda;
    if (opts.standardize) {
        m.feature_mean.assign(d, 0.0);
        m.feature_scale.assign(d, 0.0);
        for (const PixelSample& s : samples)
            for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] += s.feature[j];
        for (double& v : m.feature_mean) v /= static_cast<double>(n);
        for (const PixelSample& s : samples)
            for (std::size_t j = 0; j < d; ++j) {
                const double t = s.feature[j] - m.feature_mean[j];
                m.feature_scale[j] += t * t;
            }
        for (double& v : m.feature_scale) {
            v = std::sqrt(v / static_cast<double>(n));
            if (v < 1e-12) v = 1.0;
        }
    }

    // Augmented rows [z, 1]; the last weight is the bias.
    const std::size_t da = d + 1;
    std::vector<double> x(n * da);
    std::vector<double> y(n);
    std::vector<double> qii(n);
    std::vector<double> z;
    for (std::size_t i = 0; i < n; ++i) {
        standardize_into(m, samples[i].feature, z);
        std::copy(z.begin(), z.end(), x.begin() + i * da);
        x[i * da + d] = 1.0;
        y[i] = samples[i].label;
        qii[i] = std::inner_product(x.begin() + i * da, x.begin() + (i + 1) * da, x.begin() + i * da, 0.0);
    }

    // lambda |w|^2 + (1/n) sum hinge  ==  2 lambda (0.5 |w|^2 + C sum hinge)
    const double C = 1.0 / (2.0 * opts.lambda * static_cast<double>(n));
    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(da, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(opts.seed);
    SvmReport& rep = fit.report;
    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        shuffle(order, rng);
        double violation = 0.0;
        for (std::size_t i : order) {
            const double* xi = x.data() + i * da;
            const double g = y[i] * std::inner_product(xi, xi + da, w.begin(), 0.0) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= C) pg = std::max(g, 0.0);
            violation = std::max(violation, std::abs(pg));
            if (pg != 0.0) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / qii[i], 0.0, C);
                const double step = (alpha[i] - old) * y[i];
                if (step != 0.0)
                    for (std::size_t j = 0; j < da; ++j) w[j] += step * xi[j];
            }
        }
        rep.epochs = epoch + 1;
        rep.max_violation = violation;
        if (violation < opts.tol) {
            rep.converged = true;
            break;
        }
    }

    m.w.assign(w.begin(), w.begin() + d);
    m.b = w[d];
    double wsq = 0.0;
    for (double v : w) wsq += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + i * da;
        hinge += std::max(0.0, 1.0 - y[i] * std::inner_product(xi, xi + da, w.begin(), 0.0));
    }
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    rep.primal = opts.lambda * wsq + hinge / static_cast<double>(n);
    rep.dual = 2.0 * opts.lambda * (alpha_sum - 0.5 * wsq);
    rep.gap = rep.primal - rep.dual;
    return fit;
}

double svm_objective(const SvmModel& model, std::span<const PixelSample> samples) {
    if (samples.empty()) throw ArgumentError("objective of an empty sample set");
    double wsq = model.b * model.b;
    for (double v : model.w) wsq += v * v;
    double hinge = 0.0;
    for (const PixelSample& s : samples)
        hinge += std::max(0.0, 1.0 - s.label * decision_value(model, s.feature));
    return model.lambda * wsq + hinge / static_cast<double>(samples.size());
}

double decision_value(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.w.size())
        throw ShapeError("feature length " + std::to_string(x.size()) + " does not match SVM width " +
                         std::to_string(model.w.size()));
    double s = model.b;
    if (model.feature_mean.empty()) {
        for (std::size_t j = 0; j < x.size(); ++j) s += model.w[j] * x[j];
    } else {
        for (std::size_t j = 0; j < x.size(); ++j)
            s += model.w[j] * ((x[j] - model.feature_mean[j]) / model.feature_scale[j]);
    }
    return s;
}

std::vector<double> decision_values(const SvmModel& model, const Matrix& fmat) {
    if (fmat.cols != model.w.size())
        throw ShapeError("feature matrix has " + std::to_string(fmat.cols) + " columns, SVM expects " +
                         std::to_string(model.w.size()));
    std::vector<double> scores(fmat.rows);
    for (std::size_t r = 0; r < fmat.rows; ++r) scores[r] = decision_value(model, fmat.row(r));
    return scores;
}

std::vector<int> predict_labels(const SvmModel& model, const Matrix& fmat) {
    const std::vector<double> s = decision_values(model, fmat);
    std::vector<int> labels(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) labels[i] = s[i] > 0.0 ? 1 : -1;
    return labels;
}

void save_svm(const std::filesystem::path& path, const SvmModel& model) {
    nlohmann::json j;
    j["format_version"] = kSvmFormatVersion;
    j["feature_dim"] = model.w.size();
    j["w"] = model.w;
    j["b"] = model.b;
    j["lambda"] = model.lambda;
    j["feature_mean"] = model.feature_mean;
    j["feature_scale"] = model.feature_scale;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad SVM file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kSvmFormatVersion)
            throw FormatError("unsupported SVM format version in " + path.string());
        SvmModel m;
        m.w = j.at("w").get<std::vector<double>>();
        m.b = j.at("b").get<double>();
        m.lambda = j.at("lambda").get<double>();
        m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
        m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
        if (j.at("feature_dim").get<std::size_t>() != m.w.size())
            throw FormatError("feature_dim disagrees with w in " + path.string());
        if (!m.feature_mean.empty() &&
            (m.feature_mean.size() != m.w.size() || m.feature_scale.size() != m.w.size()))
            throw FormatError("standardization vectors disagree with w in " + path.string());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad SVM file " + path.string() + ": " + e.what());
    }
}

}  // namespace edgehyb
