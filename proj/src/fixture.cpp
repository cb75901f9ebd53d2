#include "edgehyb/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "edgehyb/errors.hpp"
#include "edgehyb/rng.hpp"

namespace edgehyb {

namespace {

enum class ShapeKind { Rect, Ellipse, Triangle };

struct Shape {
    ShapeKind kind;
    double cy, cx, ry, rx;  // centre and half extents
    double angle;           // rotation, rectangles and ellipses
    double ax, ay, bx, by, qx, qy;  // triangle vertices
    double level;
};

bool inside(const Shape& s, double y, double x) {
    if (s.kind == ShapeKind::Triangle) {
        auto cross = [](double x0, double y0, double x1, double y1, double x, double y) {
            return (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
        };
        const double d1 = cross(s.ax, s.ay, s.bx, s.by, x, y);
        const double d2 = cross(s.bx, s.by, s.qx, s.qy, x, y);
        const double d3 = cross(s.qx, s.qy, s.ax, s.ay, x, y);
        const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
        const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
        return !(neg && pos);
    }
    const double c = std::cos(s.angle), sn = std::sin(s.angle);
    const double u = (x - s.cx) * c + (y - s.cy) * sn;
    const double v = -(x - s.cx) * sn + (y - s.cy) * c;
    if (s.kind == ShapeKind::Rect) return std::abs(u) <= s.rx && std::abs(v) <= s.ry;
    return (u * u) / (s.rx * s.rx) + (v * v) / (s.ry * s.ry) <= 1.0;
}

std::string padded(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

void save_mask(const std::filesystem::path& path, const BinaryMap& m) {
    std::vector<std::uint8_t> bytes(m.bits.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = m.bits[i] ? 255 : 0;
    save_png_gray8(path, m.height, m.width, bytes);
}

}  // namespace

FixtureScene make_scene(const FixtureOptions& opts, std::uint64_t scene_seed) {
    if (opts.height < 16 || opts.width < 16) throw ArgumentError("fixture images must be at least 16x16");
    if (opts.annotators < 1) throw ArgumentError("fixture needs at least one annotator");
    if (!(opts.noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be non-negative");
    Rng rng(scene_seed);
    const int h = opts.height, w = opts.width;
    const double span = std::min(h, w);

    const double base = uniform_real(rng, 60.0, 190.0);
    const double gy = uniform_real(rng, -30.0, 30.0);
    const double gx = uniform_real(rng, -30.0, 30.0);

    const int n_shapes = 2 + static_cast<int>(uniform_index(rng, 3));
    std::vector<Shape> shapes;
    std::vector<double> levels{base};
    for (int k = 0; k < n_shapes; ++k) {
        Shape s{};
        const std::uint64_t kind = uniform_index(rng, 3);
        s.kind = kind == 0 ? ShapeKind::Rect : kind == 1 ? ShapeKind::Ellipse : ShapeKind::Triangle;
        s.cy = uniform_real(rng, 0.2, 0.8) * h;
        s.cx = uniform_real(rng, 0.2, 0.8) * w;
        s.ry = uniform_real(rng, 0.08, 0.25) * span;
        s.rx = uniform_real(rng, 0.08, 0.25) * span;
        s.angle = uniform_real(rng, 0.0, 3.14159265358979323846);
        const double a0 = uniform_real(rng, 0.0, 6.283185307179586);
        s.ax = s.cx + s.rx * std::cos(a0);
        s.ay = s.cy + s.ry * std::sin(a0);
        s.bx = s.cx + s.rx * std::cos(a0 + 2.3);
        s.by = s.cy + s.ry * std::sin(a0 + 2.3);
        s.qx = s.cx + s.rx * std::cos(a0 + 4.3);
        s.qy = s.cy + s.ry * std::sin(a0 + 4.3);
        // keep every shape at least 45 grey levels away from everything drawn so far
        for (int tries = 0;; ++tries) {
            s.level = uniform_real(rng, 20.0, 235.0);
            bool ok = true;
            for (double l : levels) ok = ok && std::abs(l - s.level) >= 45.0;
            if (ok || tries > 50) break;
        }
        levels.push_back(s.level);
        shapes.push_back(s);
    }

    std::vector<int> label(static_cast<std::size_t>(h) * w, 0);
    FixtureScene scene;
    scene.image = GrayImage(h, w, RangeTag::Raw8);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double y = r + 0.5, x = c + 0.5;
            double v = base + gy * (y / h - 0.5) + gx * (x / w - 0.5);
            int l = 0;
            for (int k = 0; k < n_shapes; ++k)
                if (inside(shapes[static_cast<std::size_t>(k)], y, x)) {
                    l = k + 1;
                    v = shapes[static_cast<std::size_t>(k)].level;
                }
            label[static_cast<std::size_t>(r) * w + c] = l;
            v += opts.noise_sigma * normal01(rng);
            scene.image(r, c) = std::clamp(std::round(v), 0.0, 255.0);
        }

    // boundary pixel: owns a higher label than one of its 4-neighbours
    std::vector<int> owner(label.size(), 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int l = label[static_cast<std::size_t>(r) * w + c];
            if (l == 0) continue;
            const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& p : nb) {
                if (p[0] < 0 || p[0] >= h || p[1] < 0 || p[1] >= w) continue;
                if (label[static_cast<std::size_t>(p[0]) * w + p[1]] < l) {
                    owner[static_cast<std::size_t>(r) * w + c] = l;
                    break;
                }
            }
        }

    for (int a = 0; a < opts.annotators; ++a) {
        int omit = 0;
        if (a > 0 && n_shapes > 1) omit = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_shapes)));
        BinaryMap m(h, w);
        for (std::size_t i = 0; i < owner.size(); ++i) m.bits[i] = owner[i] != 0 && owner[i] != omit ? 1 : 0;
        scene.annotators.push_back(std::move(m));
    }
    return scene;
}

void generate_fixture(const std::filesystem::path& root, const FixtureOptions& opts) {
    if (opts.n_train < 0 || opts.n_val < 0 || opts.n_test < 0 || opts.n_train + opts.n_val + opts.n_test == 0)
        throw ArgumentError("fixture needs at least one image");
    Rng master(opts.seed);
    const std::pair<const char*, int> splits[] = {{"train", opts.n_train}, {"val", opts.n_val}, {"test", opts.n_test}};
    for (const auto& [split, count] : splits) {
        if (count == 0) continue;
        const auto image_dir = root / "images" / split;
        const auto gt_dir = root / "groundtruth" / split;
        std::filesystem::create_directories(image_dir);
        std::filesystem::create_directories(gt_dir);
        for (int i = 0; i < count; ++i) {
            const FixtureScene scene = make_scene(opts, master());
            const std::string id = std::string(split) + "_" + padded(i);
            save_image(image_dir / (id + ".png"), scene.image);
            for (std::size_t a = 0; a < scene.annotators.size(); ++a)
                save_mask(gt_dir / (id + "_gt" + std::to_string(a) + ".png"), scene.annotators[a]);
        }
    }
}

}  // namespace edgehyb
