#include "edgehyb/morphology.hpp"

#include <array>

namespace edgehyb {

std::size_t BinaryMap::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b != 0;
    return n;
}

BinaryMap binarize(const EdgeMap& e, double threshold) {
    BinaryMap m(e.height, e.width);
    for (std::size_t i = 0; i < e.size(); ++i) m.bits[i] = e.confidence[i] >= threshold ? 1 : 0;
    return m;
}

std::vector<std::size_t> label_components(const BinaryMap& m, std::vector<int>& labels) {
    labels.assign(m.bits.size(), 0);
    std::vector<std::size_t> sizes{0};
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < m.bits.size(); ++seed) {
        if (!m.bits[seed] || labels[seed]) continue;
        const int label = static_cast<int>(sizes.size());
        std::size_t size = 0;
        labels[seed] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const int r = static_cast<int>(i / m.width);
            const int c = static_cast<int>(i % m.width);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= m.height || cc < 0 || cc >= m.width) continue;
                    const std::size_t j = static_cast<std::size_t>(rr) * m.width + cc;
                    if (m.bits[j] && !labels[j]) {
                        labels[j] = label;
                        stack.push_back(j);
                    }
                }
        }
        sizes.push_back(size);
    }
    return sizes;
}

BinaryMap remove_small_components(const BinaryMap& m, std::size_t min_size) {
    std::vector<int> labels;
    const std::vector<std::size_t> sizes = label_components(m, labels);
    BinaryMap out(m.height, m.width);
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.bits[i] = labels[i] && sizes[static_cast<std::size_t>(labels[i])] >= min_size ? 1 : 0;
    return out;
}

BinaryMap thin(const BinaryMap& m) {
    BinaryMap cur = m;
    auto px = [&](int r, int c) -> int {
        return (r < 0 || r >= cur.height || c < 0 || c >= cur.width) ? 0 : cur(r, c);
    };
    std::vector<std::size_t> remove;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            remove.clear();
            for (int r = 0; r < cur.height; ++r)
                for (int c = 0; c < cur.width; ++c) {
                    if (!cur(r, c)) continue;
                    // P2..P9 clockwise from north
                    const std::array<int, 8> p{px(r - 1, c),     px(r - 1, c + 1), px(r, c + 1), px(r + 1, c + 1),
                                               px(r + 1, c),     px(r + 1, c - 1), px(r, c - 1), px(r - 1, c - 1)};
                    int b = 0;
                    int a = 0;
                    for (int k = 0; k < 8; ++k) {
                        b += p[k];
                        a += (p[k] == 0 && p[(k + 1) % 8] == 1);
                    }
                    if (b < 2 || b > 6 || a != 1) continue;
                    const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                              : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
                    if (ok) remove.push_back(static_cast<std::size_t>(r) * cur.width + c);
                }
            if (remove.empty()) continue;
            // a 2x2 square is flagged whole; keep its first pixel so the component survives
            std::vector<int> labels;
            std::vector<std::size_t> left = label_components(cur, labels);
            for (std::size_t i : remove) --left[labels[i]];
            for (std::size_t i : remove) {
                if (left[labels[i]] == 0) {
                    left[labels[i]] = 1;
                    continue;
                }
                cur.bits[i] = 0;
                changed = true;
            }
        }
    }
    // Zhang-Suen leaves 4-connected staircases; drop their redundant corners
    changed = true;
    while (changed) {
        changed = false;
        for (int r = 0; r < cur.height; ++r)
            for (int c = 0; c < cur.width; ++c) {
                if (!cur(r, c)) continue;
                // x1..x8 counter-clockwise from east, odd entries are the 4-neighbours
                const std::array<int, 8> x{px(r, c + 1),     px(r - 1, c + 1), px(r - 1, c), px(r - 1, c - 1),
                                           px(r, c - 1),     px(r + 1, c - 1), px(r + 1, c), px(r + 1, c + 1)};
                int b = 0;
                int yokoi = 0;
                for (int k = 0; k < 8; ++k) b += x[k];
                for (int k = 0; k < 8; k += 2) {
                    const int n0 = 1 - x[k], n1 = 1 - x[(k + 1) % 8], n2 = 1 - x[(k + 2) % 8];
                    yokoi += n0 - n0 * n1 * n2;
                }
                if (b >= 2 && yokoi == 1) {
                    cur(r, c) = 0;
                    changed = true;
                }
            }
    }
    return cur;
}

EdgeMap postprocess_morphological(const EdgeMap& e, std::size_t min_component) {
    const BinaryMap skeleton = thin(remove_small_components(binarize(e, 0.5), min_component));
    EdgeMap out(e.height, e.width);
    for (std::size_t i = 0; i < e.size(); ++i) out.confidence[i] = skeleton.bits[i] ? e.confidence[i] : 0.0;
    return out;
}

}  // namespace edgehyb
