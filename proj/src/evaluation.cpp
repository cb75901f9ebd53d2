#include "edgehyb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "edgehyb/errors.hpp"

namespace edgehyb {

namespace {

struct Offset {
    int dy;
    int dx;
};

std::vector<Offset> offsets_within(double radius) {
    std::vector<std::tuple<int, int, int>> found;
    const int r = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const int d2 = dy * dy + dx * dx;
            if (d2 <= r2) found.emplace_back(d2, dy, dx);
        }
    std::sort(found.begin(), found.end());
    std::vector<Offset> out;
    out.reserve(found.size());
    for (const auto& [d2, dy, dx] : found) out.push_back({dy, dx});
    return out;
}

constexpr int kFree = -1;
constexpr int kInf = std::numeric_limits<int>::max();

// Bipartite graph: left = gt pixels, right = predicted pixels.
class Matcher {
public:
    Matcher(const BinaryMap& pred, const BinaryMap& gt, std::vector<Offset> offsets)
        : h_(gt.height), w_(gt.width), offsets_(std::move(offsets)), pred_id_(pred.bits.size(), kFree) {
        for (std::size_t i = 0; i < gt.bits.size(); ++i)
            if (gt.bits[i]) left_.push_back(static_cast<int>(i));
        int n = 0;
        for (std::size_t i = 0; i < pred.bits.size(); ++i)
            if (pred.bits[i]) pred_id_[i] = n++;
        match_l_.assign(left_.size(), kFree);
        match_r_.assign(static_cast<std::size_t>(n), kFree);
        dist_.assign(left_.size(), kInf);
    }

    int neighbor(int u, std::size_t k) const {
        const int p = left_[static_cast<std::size_t>(u)];
        const int r = p / w_ + offsets_[k].dy;
        const int c = p % w_ + offsets_[k].dx;
        if (r < 0 || r >= h_ || c < 0 || c >= w_) return kFree;
        return pred_id_[static_cast<std::size_t>(r) * w_ + c];
    }

    void greedy() {
        for (std::size_t k = 0; k < offsets_.size(); ++k)
            for (std::size_t u = 0; u < left_.size(); ++u) {
                if (match_l_[u] != kFree) continue;
                const int v = neighbor(static_cast<int>(u), k);
                if (v != kFree && match_r_[static_cast<std::size_t>(v)] == kFree) link(static_cast<int>(u), v);
            }
    }

    // Hopcroft-Karp phases from the current matching.
    void augment_all() {
        while (layer()) {
            for (std::size_t u = 0; u < left_.size(); ++u)
                if (match_l_[u] == kFree) extend(static_cast<int>(u));
        }
    }

    std::size_t size() const {
        return static_cast<std::size_t>(std::count_if(match_l_.begin(), match_l_.end(), [](int v) { return v != kFree; }));
    }
    std::size_t left_count() const { return left_.size(); }
    std::size_t right_count() const { return match_r_.size(); }
    const std::vector<int>& pred_ids() const { return pred_id_; }
    bool right_matched(int v) const { return match_r_[static_cast<std::size_t>(v)] != kFree; }

private:
    void link(int u, int v) {
        match_l_[static_cast<std::size_t>(u)] = v;
        match_r_[static_cast<std::size_t>(v)] = u;
    }

    bool layer() {
        std::queue<int> q;
        for (std::size_t u = 0; u < left_.size(); ++u) {
            if (match_l_[u] == kFree) {
                dist_[u] = 0;
                q.push(static_cast<int>(u));
            } else {
                dist_[u] = kInf;
            }
        }
        bool found = false;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (std::size_t k = 0; k < offsets_.size(); ++k) {
                const int v = neighbor(u, k);
                if (v == kFree) continue;
                const int m = match_r_[static_cast<std::size_t>(v)];
                if (m == kFree) {
                    found = true;
                } else if (dist_[static_cast<std::size_t>(m)] == kInf) {
                    dist_[static_cast<std::size_t>(m)] = dist_[static_cast<std::size_t>(u)] + 1;
                    q.push(m);
                }
            }
        }
        return found;
    }

    // Iterative layered DFS from a free left vertex.
    bool extend(int root) {
        struct Frame {
            int u;
            std::size_t k;
        };
        std::vector<Frame> stack{{root, 0}};
        std::vector<int> via;
        while (!stack.empty()) {
            const std::size_t top = stack.size() - 1;
            const int u = stack[top].u;
            bool pushed = false;
            while (stack[top].k < offsets_.size()) {
                const int v = neighbor(u, stack[top].k++);
                if (v == kFree) continue;
                const int m = match_r_[static_cast<std::size_t>(v)];
                if (m == kFree) {
                    via.push_back(v);
                    for (std::size_t i = 0; i < stack.size(); ++i) link(stack[i].u, via[i]);
                    return true;
                }
                if (dist_[static_cast<std::size_t>(m)] == dist_[static_cast<std::size_t>(u)] + 1) {
                    via.push_back(v);
                    stack.push_back({m, 0});
                    pushed = true;
                    break;
                }
            }
            if (pushed) continue;
            dist_[static_cast<std::size_t>(u)] = kInf;
            stack.pop_back();
            if (!via.empty()) via.pop_back();
        }
        return false;
    }

    int h_;
    int w_;
    std::vector<Offset> offsets_;
    std::vector<int> pred_id_;
    std::vector<int> left_;
    std::vector<int> match_l_;
    std::vector<int> match_r_;
    std::vector<int> dist_;
};

void check_grid_agreement(const std::vector<std::vector<PRPoint>>& per_image) {
    if (per_image.empty()) throw ArgumentError("no images to aggregate");
    const auto& first = per_image.front();
    if (first.empty()) throw ArgumentError("empty threshold grid");
    for (const auto& curve : per_image) {
        if (curve.size() != first.size()) throw ShapeError("images were evaluated on different grids");
        for (std::size_t k = 0; k < curve.size(); ++k)
            if (curve[k].threshold != first[k].threshold)
                throw ShapeError("images were evaluated on different grids");
    }
}

}  // namespace

MatchResult match_boundaries(const BinaryMap& pred, const BinaryMap& gt, double max_dist) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw ShapeError("prediction and ground truth differ in size");
    if (!(max_dist >= 0.0)) throw ArgumentError("max_dist must be non-negative");
    const double diagonal = std::hypot(static_cast<double>(gt.height), static_cast<double>(gt.width));
    Matcher m(pred, gt, offsets_within(max_dist * diagonal));
    m.greedy();
    m.augment_all();
    MatchResult res;
    res.tp = m.size();
    res.fn = m.left_count() - res.tp;
    res.fp = m.right_count() - res.tp;
    res.pred_matched.assign(pred.bits.size(), 0);
    const std::vector<int>& ids = m.pred_ids();
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != kFree && m.right_matched(ids[i])) res.pred_matched[i] = 1;
    return res;
}

PRPoint make_pr_point(double threshold, std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tp_pred) {
    PRPoint p;
    p.threshold = threshold;
    p.tp = tp;
    p.fp = fp;
    p.fn = fn;
    p.tp_pred = tp_pred;
    p.precision = tp_pred + fp == 0 ? 1.0 : static_cast<double>(tp_pred) / static_cast<double>(tp_pred + fp);
    p.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return p;
}

PRPoint pool_points(const std::vector<PRPoint>& points) {
    if (points.empty()) throw ArgumentError("nothing to pool");
    std::size_t tp = 0, fp = 0, fn = 0, tp_pred = 0;
    for (const PRPoint& p : points) {
        if (p.threshold != points.front().threshold) throw ArgumentError("pooling points from different thresholds");
        tp += p.tp;
        fp += p.fp;
        fn += p.fn;
        tp_pred += p.tp_pred;
    }
    return make_pr_point(points.front().threshold, tp, fp, fn, tp_pred);
}

double f_measure(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double f_measure(const PRPoint& p) { return f_measure(p.precision, p.recall); }

PRPoint pr_at_threshold(const EdgeMap& pred, const std::vector<BinaryMap>& gts, double t, double max_dist) {
    if (gts.empty()) throw ArgumentError("at least one ground-truth map is required");
    const BinaryMap bin = binarize(pred, t);
    std::vector<std::uint8_t> any(bin.bits.size(), 0);
    std::size_t tp = 0, fn = 0;
    for (const BinaryMap& gt : gts) {
        const MatchResult m = match_boundaries(bin, gt, max_dist);
        tp += m.tp;
        fn += m.fn;
        for (std::size_t i = 0; i < any.size(); ++i) any[i] |= m.pred_matched[i];
    }
    std::size_t tp_pred = 0;
    for (std::uint8_t b : any) tp_pred += b;
    return make_pr_point(t, tp, bin.count() - tp_pred, fn, tp_pred);
}

std::vector<PRPoint> pr_curve(const EdgeMap& pred, const std::vector<BinaryMap>& gts, const std::vector<double>& grid,
                              double max_dist) {
    std::vector<PRPoint> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(pr_at_threshold(pred, gts, t, max_dist));
    return out;
}

std::vector<double> threshold_grid(int n, double lo, double hi) {
    if (n < 1) throw ArgumentError("threshold grid needs at least one value");
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) throw ArgumentError("threshold grid must lie in [0,1]");
    if (n == 1) return {lo};
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

std::vector<PRPoint> dataset_curve(const std::vector<std::vector<PRPoint>>& per_image) {
    check_grid_agreement(per_image);
    std::vector<PRPoint> out;
    std::vector<PRPoint> column(per_image.size());
    for (std::size_t k = 0; k < per_image.front().size(); ++k) {
        for (std::size_t i = 0; i < per_image.size(); ++i) column[i] = per_image[i][k];
        out.push_back(pool_points(column));
    }
    return out;
}

OdsResult compute_ods(const std::vector<std::vector<PRPoint>>& per_image) {
    const std::vector<PRPoint> curve = dataset_curve(per_image);
    OdsResult best{curve.front().threshold, f_measure(curve.front()), 0};
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const double f = f_measure(curve[k]);
        if (f > best.f) best = {curve[k].threshold, f, k};
    }
    return best;
}

std::size_t best_threshold_index(const std::vector<PRPoint>& curve) {
    if (curve.empty()) throw ArgumentError("empty curve");
    std::size_t best = 0;
    double best_f = f_measure(curve.front());
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const double f = f_measure(curve[k]);
        if (f > best_f) {
            best_f = f;
            best = k;
        }
    }
    return best;
}

double compute_ois(const std::vector<std::vector<PRPoint>>& per_image) {
    check_grid_agreement(per_image);
    std::size_t tp = 0, fp = 0, fn = 0, tp_pred = 0;
    for (const auto& curve : per_image) {
        const PRPoint& p = curve[best_threshold_index(curve)];
        tp += p.tp;
        fp += p.fp;
        fn += p.fn;
        tp_pred += p.tp_pred;
    }
    return f_measure(make_pr_point(0.0, tp, fp, fn, tp_pred));
}

double compute_ap(std::vector<PRPoint> curve) {
    if (curve.empty()) throw ArgumentError("empty curve");
    std::stable_sort(curve.begin(), curve.end(), [](const PRPoint& a, const PRPoint& b) {
        return a.recall < b.recall || (a.recall == b.recall && a.precision > b.precision);
    });
    // [0, lowest recall] carries the precision observed there
    double area = curve.front().recall * curve.front().precision;
    for (std::size_t k = 1; k < curve.size(); ++k)
        area += (curve[k].recall - curve[k - 1].recall) * (curve[k].precision + curve[k - 1].precision) / 2.0;
    return area;
}

EvalSummary summarize(std::string method, std::vector<std::string> ids, std::vector<std::vector<PRPoint>> per_image) {
    if (ids.size() != per_image.size()) throw ArgumentError("one id per image curve is required");
    EvalSummary s;
    s.method = std::move(method);
    const OdsResult ods = compute_ods(per_image);
    s.ods = ods.f;
    s.ods_threshold = ods.threshold;
    s.ois = compute_ois(per_image);
    s.curve = dataset_curve(per_image);
    s.ap = compute_ap(s.curve);
    for (const auto& curve : per_image) s.per_image_best_f.push_back(f_measure(curve[best_threshold_index(curve)]));
    s.image_ids = std::move(ids);
    s.per_image = std::move(per_image);
    return s;
}

EvalSummary evaluate_method(const std::string& method, const Detector& detect, const std::vector<EvalItem>& items,
                            const std::vector<double>& grid, double max_dist) {
    if (items.empty()) throw DataError("evaluation set is empty");
    std::vector<std::string> ids;
    std::vector<std::vector<PRPoint>> per_image;
    for (const EvalItem& item : items) {
        if (item.gts.empty()) throw DataError("sample " + item.id + " has no ground truth");
        const EdgeMap e = detect(item.image);
        if (e.height != item.gts.front().height || e.width != item.gts.front().width)
            throw ShapeError(method + " produced a " + std::to_string(e.height) + "x" + std::to_string(e.width) +
                             " map for " + item.id + ", ground truth is " + std::to_string(item.gts.front().height) +
                             "x" + std::to_string(item.gts.front().width));
        ids.push_back(item.id);
        per_image.push_back(pr_curve(e, item.gts, grid, max_dist));
    }
    return summarize(method, std::move(ids), std::move(per_image));
}

}  // namespace edgehyb
