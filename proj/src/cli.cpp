#include "edgehyb/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <deque>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "edgehyb/errors.hpp"
#include "edgehyb/fixture.hpp"
#include "edgehyb/morphology.hpp"
#include "edgehyb/report.hpp"
#include "edgehyb/svm.hpp"

namespace fs = std::filesystem;

namespace edgehyb {

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const std::string& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::uint8_t> panel_bytes(const GrayImage& unit) { return to_bytes_unit(unit.pixels); }

EdgeMap oracle_map(const std::vector<BinaryMap>& gts) {
    EdgeMap e(gts.front().height, gts.front().width);
    for (const BinaryMap& g : gts)
        for (std::size_t i = 0; i < e.size(); ++i)
            if (g.bits[i]) e.confidence[i] = 1.0;
    return e;
}

}  // namespace

const std::vector<std::string>& classical_methods() {
    static const std::vector<std::string> m = {"sobel", "prewitt", "roberts", "log", "zerocross", "canny"};
    return m;
}

std::vector<std::string> detect_methods() {
    std::vector<std::string> m{"hybrid"};
    m.insert(m.end(), classical_methods().begin(), classical_methods().end());
    return m;
}

std::vector<std::string> evaluate_methods_list() {
    std::vector<std::string> m = detect_methods();
    m.push_back("oracle");
    return m;
}

Detector make_detector(const std::string& method, const RunConfig& cfg, const HybridDetector* hybrid) {
    if (method == "hybrid") {
        if (!hybrid) throw ArgumentError("method hybrid needs a trained bundle (--bundle)");
        HybridDetector det = *hybrid;
        det.postprocess = cfg.postprocess;
        det.min_component = static_cast<std::size_t>(cfg.min_component);
        if (cfg.binary) return [det](const GrayImage& raw) { return detect_hybrid_binary(det, raw); };
        return [det](const GrayImage& raw) { return detect_hybrid(det, raw); };
    }
    std::function<EdgeMap(const GrayImage&)> base;
    if (method == "sobel") base = [](const GrayImage& g) { return sobel(g); };
    else if (method == "prewitt") base = [](const GrayImage& g) { return prewitt(g); };
    else if (method == "roberts") base = [](const GrayImage& g) { return roberts(g); };
    else if (method == "log") base = [s = cfg.log_sigma](const GrayImage& g) { return log_detector(g, s); };
    else if (method == "zerocross") base = [](const GrayImage& g) { return zerocross(g); };
    else if (method == "canny") {
        const CannyParams p{cfg.canny_sigma, cfg.canny_low, cfg.canny_high_quantile};
        base = [p](const GrayImage& g) { return canny(g, p); };
    } else {
        throw ArgumentError("unknown method '" + method + "'; valid methods: " + join(detect_methods()));
    }
    return [base](const GrayImage& raw) { return base(prepare_input(raw)); };
}

std::vector<TrainingSample> load_training_set(const DatasetManifest& m, const std::string& split) {
    std::vector<TrainingSample> out;
    for (const Sample& s : m.split(split))
        out.push_back({prepare_input(load_sample_image(m, s)), load_training_targets(m, s, kModelSize)});
    if (out.empty()) throw DataError("split '" + split + "' of " + m.name + " has no samples");
    return out;
}

std::vector<EvalItem> load_eval_items(const DatasetManifest& m, const std::string& split) {
    std::vector<EvalItem> out;
    for (const Sample& s : m.split(split)) out.push_back({s.id, load_sample_image(m, s), load_eval_gts(m, s, kModelSize)});
    if (out.empty()) throw DataError("split '" + split + "' of " + m.name + " has no samples");
    return out;
}

TrainLog train_cnn_stage(const DatasetManifest& m, const RunConfig& cfg, const fs::path& bundle) {
    if (cfg.epochs < 1) throw ArgumentError("epochs must be positive");
    const std::vector<TrainingSample> data = load_training_set(m, cfg.train_split);
    fs::create_directories(bundle);
    CnnModel model = build_model(cfg.seed);
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = cfg.seed;
    tc.checkpoint_interval = cfg.checkpoint_interval;
    tc.checkpoint_dir = bundle / "checkpoints";
    tc.log_path = bundle / "train_log.csv";
    const long per_epoch = (static_cast<long>(data.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const long total = per_epoch * cfg.epochs;
    const TrainLog log = train_cnn(model, data, tc, [total](const TrainRecord& r) {
        if (r.iteration == 1 || r.iteration % 25 == 0 || r.iteration == total)
            std::fprintf(stderr, "iter %ld/%ld  loss %.6f  rmse %.6f\n", r.iteration, total, r.loss, r.rmse);
    });
    save_checkpoint(bundle / "cnn.ckpt", model);
    return log;
}

HybridDetector train_svm_stage(const DatasetManifest& m, const RunConfig& cfg, const fs::path& bundle) {
    const fs::path ckpt = bundle / "cnn.ckpt";
    if (!fs::exists(ckpt))
        throw DataError("missing CNN checkpoint " + ckpt.string() + "; run 'train --stage cnn' first");
    HybridDetector det;
    det.cnn = load_checkpoint(ckpt);
    det.min_component = static_cast<std::size_t>(cfg.min_component);
    std::vector<PixelSample> samples;
    std::vector<GrayImage> raws;
    std::size_t warnings = 0;
    std::uint64_t index = 0;
    for (const Sample& s : m.split(cfg.train_split)) {
        GrayImage raw = load_sample_image(m, s);
        const Matrix flat = flatten_features(extract_features(det.cnn, prepare_input(raw)));
        const RealMap target = load_training_targets(m, s, kModelSize);
        std::vector<std::uint8_t> gt(target.size());
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = target.data[i] > 0.0 ? 1 : 0;
        PixelDraw draw = sample_training_pixels(flat, gt, static_cast<std::size_t>(cfg.svm_samples),
                                                cfg.seed + 0x9E3779B97F4A7C15ull * ++index);
        warnings += draw.warnings;
        for (PixelSample& p : draw.samples) samples.push_back(std::move(p));
        raws.push_back(std::move(raw));
    }
    if (raws.empty()) throw DataError("split '" + cfg.train_split + "' of " + m.name + " has no samples");
    if (warnings) std::fprintf(stderr, "warning: %zu training image(s) lacked one pixel class\n", warnings);
    SvmOptions opts;
    opts.lambda = cfg.svm_lambda;
    opts.tol = cfg.svm_tol;
    opts.max_epochs = cfg.svm_max_epochs;
    opts.seed = cfg.seed;
    const SvmFit fit = train_svm(samples, opts);
    std::fprintf(stderr, "svm: %zu samples, %d epochs, converged=%s, gap %.3g\n", samples.size(), fit.report.epochs,
                 fit.report.converged ? "yes" : "no", fit.report.gap);
    det.svm = fit.model;
    det = calibrate_scores(std::move(det), raws);
    save_bundle(bundle, det);
    return det;
}

std::vector<EvalSummary> evaluate_methods(const DatasetManifest& m, const RunConfig& cfg,
                                          const std::vector<std::string>& methods) {
    if (methods.empty()) throw ArgumentError("no methods requested");
    const std::vector<std::string> valid = evaluate_methods_list();
    for (const std::string& name : methods)
        if (!contains(valid, name))
            throw ArgumentError("unknown method '" + name + "'; valid methods: " + join(valid));
    std::optional<HybridDetector> hybrid;
    if (contains(methods, "hybrid")) {
        if (cfg.bundle.empty()) throw ArgumentError("method hybrid needs a trained bundle (--bundle)");
        hybrid = load_bundle(cfg.bundle);
    }
    const std::vector<EvalItem> items = load_eval_items(m, cfg.eval_split);
    const std::vector<double> grid = threshold_grid(cfg.grid_n, cfg.grid_lo, cfg.grid_hi);
    std::vector<EvalSummary> out;
    for (const std::string& name : methods) {
        if (name == "oracle") {
            std::vector<std::string> ids;
            std::vector<std::vector<PRPoint>> curves;
            for (const EvalItem& item : items) {
                ids.push_back(item.id);
                curves.push_back(pr_curve(oracle_map(item.gts), item.gts, grid, cfg.max_dist));
            }
            out.push_back(summarize(name, std::move(ids), std::move(curves)));
        } else {
            const Detector d = make_detector(name, cfg, hybrid ? &*hybrid : nullptr);
            out.push_back(evaluate_method(name, d, items, grid, cfg.max_dist));
        }
    }
    return out;
}

// ---- command line ----

namespace {

// A flag bound to a config key; applied only when given.
struct Binding {
    CLI::Option* opt = nullptr;
    std::string key;
    std::string value;
    bool flag = false;
};

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::deque<Binding> bindings;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_file, "Config file of key = value lines");
    app->add_option("--set", c.sets, "Override a config key (key=value), repeatable");
}

void bind(CLI::App* app, Common& c, const std::string& name, const std::string& key, const std::string& help) {
    c.bindings.push_back({nullptr, key, "", false});
    Binding& b = c.bindings.back();
    b.opt = app->add_option(name, b.value, help);
}

void bind_flag(CLI::App* app, Common& c, const std::string& name, const std::string& key, const std::string& help) {
    c.bindings.push_back({nullptr, key, "", true});
    Binding& b = c.bindings.back();
    b.opt = app->add_flag(name, help);
}

RunConfig resolve(const Common& c) {
    RunConfig cfg;
    if (!c.config_file.empty()) apply_config_file(cfg, c.config_file);
    apply_overrides(cfg, c.sets);
    for (const Binding& b : c.bindings)
        if (b.opt->count()) cfg.set(b.key, b.flag ? "true" : b.value);
    cfg.check();
    return cfg;
}

int report_error(const char* kind, const std::exception& e, int code) {
    std::fprintf(stderr, "edgehyb: %s: %s\n", kind, e.what());
    return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Hybrid CNN + linear SVM edge detection with classical baselines and an ODS/OIS/AP benchmark"};
    app.name("edgehyb");
    app.require_subcommand(1);
    Common common;

    // ingest
    std::string ingest_root, ingest_layout = "bsds-like", ingest_out;
    CLI::App* ingest = app.add_subcommand("ingest", "Scan a dataset tree and write its manifest");
    ingest->add_option("root", ingest_root, "Dataset root holding images/ and groundtruth/")->required();
    ingest->add_option("--layout", ingest_layout,
                       "bsds-like: images/<split>/<id>.png + groundtruth/<split>/<id>_gt<k>.png; "
                       "flat-pairs: images/<id>.png + groundtruth/<id>_gt<k>.png (split test)")
        ->check(CLI::IsMember({"bsds-like", "flat-pairs"}))
        ->capture_default_str();
    ingest->add_option("--out", ingest_out, "Manifest path (default <root>/manifest.json)");
    add_common(ingest, common);

    // train
    std::string stage = "all";
    CLI::App* train = app.add_subcommand("train", "Train the CNN, the SVM, or both into a bundle directory");
    train->add_option("--stage", stage, "cnn, svm or all")->check(CLI::IsMember({"cnn", "svm", "all"}))->capture_default_str();
    bind(train, common, "--dataset", "dataset", "Dataset manifest");
    bind(train, common, "--bundle", "bundle", "Bundle directory");
    bind(train, common, "--epochs", "epochs", "CNN epochs");
    bind(train, common, "--batch-size", "batch_size", "CNN batch size");
    bind(train, common, "--lr", "learning_rate", "Adam learning rate");
    bind(train, common, "--seed", "seed", "Random seed");
    bind(train, common, "--svm-samples", "svm_samples", "Pixels drawn per class per image");
    bind(train, common, "--lambda", "svm_lambda", "SVM ridge strength");
    add_common(train, common);

    // detect
    std::vector<std::string> detect_inputs;
    std::string detect_method = "hybrid";
    CLI::App* detect = app.add_subcommand("detect", "Write edge-map PNGs for the given images");
    detect->add_option("images", detect_inputs, "Input PNG/JPEG files")->required();
    detect->add_option("--method", detect_method, "hybrid, sobel, prewitt, roberts, log, zerocross or canny")
        ->capture_default_str();
    bind(detect, common, "--bundle", "bundle", "Bundle directory (hybrid)");
    bind(detect, common, "--out", "out", "Output directory");
    bind_flag(detect, common, "--binary", "binary", "Sign-of-score output instead of calibrated confidences");
    bind_flag(detect, common, "--post", "postprocess", "Morphological post-processing");
    add_common(detect, common);

    // evaluate
    CLI::App* evaluate = app.add_subcommand("evaluate", "ODS/OIS/AP table, PR CSVs and PR curves for a split");
    bind(evaluate, common, "--dataset", "dataset", "Dataset manifest");
    bind(evaluate, common, "--methods", "methods", "Comma-separated methods (oracle allowed)");
    bind(evaluate, common, "--bundle", "bundle", "Bundle directory (hybrid)");
    bind(evaluate, common, "--split", "eval_split", "Split to evaluate");
    bind(evaluate, common, "--out", "out", "Output directory");
    bind(evaluate, common, "--max-dist", "max_dist", "Match tolerance as a fraction of the diagonal");
    bind(evaluate, common, "--thresholds", "grid_n", "Number of thresholds");
    bind_flag(evaluate, common, "--binary", "binary", "Evaluate the hybrid sign output");
    bind_flag(evaluate, common, "--post", "postprocess", "Morphological post-processing for hybrid");
    add_common(evaluate, common);

    // compare
    CLI::App* compare = app.add_subcommand("compare", "Side-by-side PNG sheets: input then one panel per method");
    bind(compare, common, "--dataset", "dataset", "Dataset manifest");
    bind(compare, common, "--methods", "methods", "Comma-separated methods");
    bind(compare, common, "--bundle", "bundle", "Bundle directory (hybrid)");
    bind(compare, common, "--split", "eval_split", "Split to draw images from");
    bind(compare, common, "--n-images", "n_images", "Number of sheets");
    bind(compare, common, "--out", "out", "Output directory");
    bind_flag(compare, common, "--binary", "binary", "Sign output for hybrid");
    bind_flag(compare, common, "--post", "postprocess", "Morphological post-processing for hybrid");
    add_common(compare, common);

    // fixture-gen
    FixtureOptions fx;
    std::string fx_root;
    CLI::App* fixture = app.add_subcommand("fixture-gen", "Write a synthetic-shapes dataset in the bsds-like layout");
    fixture->add_option("root", fx_root, "Output root")->required();
    fixture->add_option("--train", fx.n_train, "Training images")->capture_default_str();
    fixture->add_option("--val", fx.n_val, "Validation images")->capture_default_str();
    fixture->add_option("--test", fx.n_test, "Test images")->capture_default_str();
    fixture->add_option("--height", fx.height, "Image height")->capture_default_str();
    fixture->add_option("--width", fx.width, "Image width")->capture_default_str();
    fixture->add_option("--annotators", fx.annotators, "Annotators per image")->capture_default_str();
    fixture->add_option("--noise", fx.noise_sigma, "Gaussian noise sigma in grey levels")->capture_default_str();
    fixture->add_option("--seed", fx.seed, "Random seed")->capture_default_str();
    add_common(fixture, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const RunConfig cfg = resolve(common);
        if (ingest->parsed()) {
            const fs::path out = ingest_out.empty() ? fs::path(ingest_root) / "manifest.json" : fs::path(ingest_out);
            const DatasetManifest m = ingest_directory(ingest_root, parse_layout(ingest_layout), utc_now());
            save_manifest(out, m);
            echo_config(cfg, out.has_parent_path() ? out.parent_path() : fs::path("."));
            std::printf("%s: %zu samples, %zu skipped\n", out.string().c_str(), m.samples.size(), m.skipped.size());
            for (const SkippedSample& s : m.skipped)
                std::printf("skipped %s (%s)\n", s.image_path.c_str(), s.reason.c_str());
        } else if (train->parsed()) {
            if (cfg.dataset.empty()) throw ArgumentError("train needs --dataset");
            if (cfg.bundle.empty()) throw ArgumentError("train needs --bundle");
            const DatasetManifest m = load_manifest(cfg.dataset);
            fs::create_directories(cfg.bundle);
            echo_config(cfg, cfg.bundle);
            if (stage == "cnn" || stage == "all") {
                const TrainLog log = train_cnn_stage(m, cfg, cfg.bundle);
                std::printf("cnn: %zu iterations, final loss %.6g\n", log.records.size(),
                            log.records.empty() ? 0.0 : log.records.back().loss);
            }
            if (stage == "svm" || stage == "all") {
                const HybridDetector det = train_svm_stage(m, cfg, cfg.bundle);
                std::printf("svm: calibration [%.6g, %.6g], bundle %s\n", det.calibration.lo, det.calibration.hi,
                            cfg.bundle.c_str());
            }
        } else if (detect->parsed()) {
            if (!contains(detect_methods(), detect_method))
                throw ArgumentError("unknown method '" + detect_method + "'; valid methods: " + join(detect_methods()));
            std::optional<HybridDetector> hybrid;
            if (detect_method == "hybrid") {
                if (cfg.bundle.empty()) throw ArgumentError("method hybrid needs a trained bundle (--bundle)");
                hybrid = load_bundle(cfg.bundle);
            }
            const Detector d = make_detector(detect_method, cfg, hybrid ? &*hybrid : nullptr);
            fs::create_directories(cfg.out);
            echo_config(cfg, cfg.out);
            for (const std::string& input : detect_inputs) {
                const fs::path out = fs::path(cfg.out) / (fs::path(input).stem().string() + "_" + detect_method + ".png");
                save_edge_map(out.string(), d(load_image(input)));
                std::printf("%s\n", out.string().c_str());
            }
        } else if (evaluate->parsed()) {
            if (cfg.dataset.empty()) throw ArgumentError("evaluate needs --dataset");
            const DatasetManifest m = load_manifest(cfg.dataset);
            const std::vector<EvalSummary> rows = evaluate_methods(m, cfg, cfg.method_list());
            write_evaluation_outputs(cfg.out, rows);
            echo_config(cfg, cfg.out);
            std::printf("%s", summary_table(rows).c_str());
        } else if (compare->parsed()) {
            if (cfg.dataset.empty()) throw ArgumentError("compare needs --dataset");
            const DatasetManifest m = load_manifest(cfg.dataset);
            const std::vector<std::string> methods = cfg.method_list();
            if (methods.empty()) throw ArgumentError("no methods requested");
            std::optional<HybridDetector> hybrid;
            if (contains(methods, "hybrid")) {
                if (cfg.bundle.empty()) throw ArgumentError("method hybrid needs a trained bundle (--bundle)");
                hybrid = load_bundle(cfg.bundle);
            }
            std::vector<Detector> detectors;
            for (const std::string& name : methods) detectors.push_back(make_detector(name, cfg, hybrid ? &*hybrid : nullptr));
            std::vector<Sample> samples = m.split(cfg.eval_split);
            if (samples.empty()) throw DataError("split '" + cfg.eval_split + "' has no samples");
            if (samples.size() > static_cast<std::size_t>(cfg.n_images)) samples.resize(static_cast<std::size_t>(cfg.n_images));
            fs::create_directories(cfg.out);
            echo_config(cfg, cfg.out);
            for (const Sample& s : samples) {
                const GrayImage raw = load_sample_image(m, s);
                std::vector<std::vector<std::uint8_t>> panels{panel_bytes(prepare_input(raw))};
                for (const Detector& d : detectors) panels.push_back(to_bytes_unit(d(raw).confidence));
                const Sheet sheet = compose_sheet(panels, kModelSize, kModelSize);
                const fs::path out = fs::path(cfg.out) / ("compare_" + s.id + ".png");
                save_png_gray8(out, sheet.height, sheet.width, sheet.pixels);
                std::printf("%s\n", out.string().c_str());
            }
        } else if (fixture->parsed()) {
            generate_fixture(fx_root, fx);
            echo_config(cfg, fx_root);
            std::printf("%s: %d train, %d val, %d test\n", fx_root.c_str(), fx.n_train, fx.n_val, fx.n_test);
        }
    } catch (const ConfigError& e) {
        return report_error("config error", e, kExitUsage);
    } catch (const ArgumentError& e) {
        return report_error("usage error", e, kExitUsage);
    } catch (const DataError& e) {
        return report_error("data error", e, kExitData);
    } catch (const IoError& e) {
        return report_error("data error", e, kExitData);
    } catch (const FormatError& e) {
        return report_error("data error", e, kExitData);
    } catch (const TrainingError& e) {
        return report_error("data error", e, kExitData);
    } catch (const fs::filesystem_error& e) {
        return report_error("data error", e, kExitData);
    } catch (const std::exception& e) {
        return report_error("internal error", e, kExitInternal);
    }
    return kExitOk;
}

}  // namespace edgehyb
