#include "edgehyb/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "edgehyb/errors.hpp"
#include "edgehyb/stats.hpp"

namespace edgehyb {

namespace {

// Responses of unit-range images whose differences fall below this are rounding noise.
constexpr double kResponseFloor = 1e-10;

void require_unit(const GrayImage& img) {
    if (img.range != RangeTag::Unit) throw ArgumentError("detector expects a unit-ranged image");
    if (img.empty()) throw ArgumentError("detector input is empty");
}

EdgeMap gradient_detector(const GrayImage& img, const Kernel& kx, const Kernel& ky) {
    require_unit(img);
    const RealMap src = img.as_real_map();
    const RealMap gx = convolve2d(src, kx, Border::Replicate);
    const RealMap gy = convolve2d(src, ky, Border::Replicate);
    const double max_mag = max_gradient_magnitude(kx, ky);
    EdgeMap out(img.height, img.width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = std::sqrt(gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]);
        out.confidence[i] = m > kResponseFloor ? std::min(1.0, m / max_mag) : 0.0;
    }
    return out;
}

Kernel transpose(const Kernel& k) {
    std::vector<double> w(k.weights.size());
    for (int r = 0; r < k.rows; ++r)
        for (int c = 0; c < k.cols; ++c) w[static_cast<std::size_t>(c) * k.rows + r] = k(r, c);
    return Kernel(k.cols, k.rows, std::move(w));
}

}  // namespace

EdgeMap::EdgeMap(int h, int w, double fill)
    : height(h), width(w), confidence(static_cast<std::size_t>(h) * w, fill) {}

void validate(const EdgeMap& e) {
    if (e.confidence.size() != static_cast<std::size_t>(e.height) * e.width)
        throw ArgumentError("edge map size does not match its dimensions");
    for (double v : e.confidence)
        if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("edge confidence outside [0,1]");
}

void save_edge_map(const std::string& path, const EdgeMap& e) {
    save_png_gray8(path, e.height, e.width, to_bytes_unit(e.confidence));
}

double max_gradient_magnitude(const Kernel& gx, const Kernel& gy) {
    if (gx.rows != gy.rows || gx.cols != gy.cols) throw ArgumentError("kernel pair shapes differ");
    const std::size_t n = gx.weights.size();
    if (n > 20) throw ArgumentError("kernel too large for vertex enumeration");
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double sx = 0.0;
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                sx += gx.weights[i];
                sy += gy.weights[i];
            }
        }
        best = std::max(best, std::sqrt(sx * sx + sy * sy));
    }
    return best;
}

const Kernel& sobel_x() {
    static const Kernel k(3, 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
    return k;
}

const Kernel& sobel_y() {
    static const Kernel k = transpose(sobel_x());
    return k;
}

const Kernel& prewitt_x() {
    static const Kernel k(3, 3, {-1, 0, 1, -1, 0, 1, -1, 0, 1});
    return k;
}

const Kernel& prewitt_y() {
    static const Kernel k = transpose(prewitt_x());
    return k;
}

const Kernel& laplacian_3x3() {
    static const Kernel k(3, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0});
    return k;
}

Kernel gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int size = 2 * radius + 1;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    double total = 0.0;
    for (int r = -radius; r <= radius; ++r)
        for (int c = -radius; c <= radius; ++c) {
            const double v = std::exp(-(r * r + c * c) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(r + radius) * size + (c + radius)] = v;
            total += v;
        }
    for (double& v : w) v /= total;
    return Kernel(size, size, std::move(w));
}

Kernel log_kernel(double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int size = 2 * radius + 1;
    const double s2 = sigma * sigma;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    for (int r = -radius; r <= radius; ++r)
        for (int c = -radius; c <= radius; ++c) {
            const double q = (r * r + c * c) / (2.0 * s2);
            w[static_cast<std::size_t>(r + radius) * size + (c + radius)] =
                (q - 1.0) / (s2 * s2) * std::exp(-q);
        }
    // truncation leaves a small DC component; remove it so flat regions respond with zero
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    for (double& v : w) v -= mean;
    return Kernel(size, size, std::move(w));
}

EdgeMap sobel(const GrayImage& img) { return gradient_detector(img, sobel_x(), sobel_y()); }

EdgeMap prewitt(const GrayImage& img) { return gradient_detector(img, prewitt_x(), prewitt_y()); }

EdgeMap roberts(const GrayImage& img) {
    require_unit(img);
    static const Kernel kx(2, 2, {1, 0, 0, -1});
    static const Kernel ky(2, 2, {0, 1, -1, 0});
    static const double max_mag = max_gradient_magnitude(kx, ky);
    const int h = img.height;
    const int w = img.width;
    EdgeMap out(h, w);
    for (int r = 0; r < h; ++r) {
        const int r1 = std::min(r + 1, h - 1);
        for (int c = 0; c < w; ++c) {
            const int c1 = std::min(c + 1, w - 1);
            const double gx = img(r, c) - img(r1, c1);
            const double gy = img(r, c1) - img(r1, c);
            out(r, c) = std::min(1.0, std::sqrt(gx * gx + gy * gy) / max_mag);
        }
    }
    return out;
}

EdgeMap zero_crossings(const RealMap& resp) {
    static constexpr int kPairs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    EdgeMap out(resp.height, resp.width);
    auto inside = [&](int r, int c) { return r >= 0 && r < resp.height && c >= 0 && c < resp.width; };
    auto crossing = [](double a, double b) {
        if (!((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0))) return 0.0;
        const double diff = std::abs(a - b);
        return diff > kResponseFloor ? diff : 0.0;
    };
    double peak = 0.0;
    for (int r = 0; r < resp.height; ++r) {
        for (int c = 0; c < resp.width; ++c) {
            const double here = resp(r, c);
            double best = 0.0;
            for (const auto& d : kPairs) {
                const int ra = r - d[0], ca = c - d[1];
                const int rb = r + d[0], cb = c + d[1];
                const bool has_a = inside(ra, ca), has_b = inside(rb, cb);
                if (has_a && has_b) best = std::max(best, crossing(resp(ra, ca), resp(rb, cb)));
                // a sign change between this pixel and its direct neighbour marks both of them
                if (has_a) best = std::max(best, crossing(resp(ra, ca), here));
                if (has_b) best = std::max(best, crossing(here, resp(rb, cb)));
            }
            out(r, c) = best;
            peak = std::max(peak, best);
        }
    }
    if (peak > 0.0)
        for (double& v : out.confidence) v /= peak;
    return out;
}

EdgeMap log_detector(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("LoG sigma must be positive");
    require_unit(img);
    return zero_crossings(convolve2d(img.as_real_map(), log_kernel(sigma), Border::Replicate));
}

EdgeMap zerocross(const GrayImage& img, const std::optional<Kernel>& kernel) {
    require_unit(img);
    const Kernel& k = kernel ? *kernel : laplacian_3x3();
    return zero_crossings(convolve2d(img.as_real_map(), k, Border::Replicate));
}

EdgeMap canny(const GrayImage& img, const CannyParams& params) {
    if (!(params.low_frac > 0.0 && params.low_frac < 1.0))
        throw ArgumentError("canny low_frac must lie in (0,1)");
    if (!(params.high_quantile > 0.0 && params.high_quantile < 1.0))
        throw ArgumentError("canny high_quantile must lie in (0,1)");
    if (!(params.sigma > 0.0)) throw ArgumentError("canny sigma must be positive");
    require_unit(img);

    const int h = img.height;
    const int w = img.width;
    const RealMap smooth = convolve2d(img.as_real_map(), gaussian_kernel(params.sigma));
    const RealMap gx = convolve2d(smooth, sobel_x());
    const RealMap gy = convolve2d(smooth, sobel_y());
    RealMap mag(h, w);
    std::vector<double> nonzero;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag.data[i] = std::sqrt(gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]);
        if (mag.data[i] > kResponseFloor) nonzero.push_back(mag.data[i]);
    }
    EdgeMap out(h, w);
    if (nonzero.empty()) return out;

    auto mag_at = [&](int r, int c) {
        return (r < 0 || r >= h || c < 0 || c >= w) ? 0.0 : mag(r, c);
    };
    // Non-maximum suppression. The pixel must beat its "behind" neighbour strictly and
    // at least tie the "ahead" one, so a symmetric two-pixel plateau keeps one pixel.
    std::vector<std::uint8_t> candidate(mag.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double m = mag(r, c);
            if (m <= kResponseFloor) continue;
            double angle = std::atan2(gy(r, c), gx(r, c)) * 180.0 / 3.14159265358979323846;
            if (angle < 0) angle += 180.0;
            int dr;
            int dc;
            if (angle < 22.5 || angle >= 157.5) {
                dr = 0;
                dc = 1;
            } else if (angle < 67.5) {
                dr = 1;
                dc = 1;
            } else if (angle < 112.5) {
                dr = 1;
                dc = 0;
            } else {
                dr = 1;
                dc = -1;
            }
            if (m > mag_at(r - dr, c - dc) && m >= mag_at(r + dr, c + dc))
                candidate[static_cast<std::size_t>(r) * w + c] = 1;
        }
    }

    const double high = quantile(std::move(nonzero), params.high_quantile);
    const double low = params.low_frac * high;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (candidate[i] && mag.data[i] >= high) {
            out.confidence[i] = 1.0;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int r = static_cast<int>(i / w);
        const int c = static_cast<int>(i % w);
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
                if (candidate[j] && out.confidence[j] == 0.0 && mag.data[j] >= low) {
                    out.confidence[j] = 1.0;
                    stack.push_back(j);
                }
            }
    }
    return out;
}

}  // namespace edgehyb
