#ifndef EDGEHYB_EVALUATION_HPP
#define EDGEHYB_EVALUATION_HPP

#include <functional>
#include <string>
#include <vector>

#include "edgehyb/detectors.hpp"
#include "edgehyb/image.hpp"
#include "edgehyb/morphology.hpp"

namespace edgehyb {

inline constexpr double kDefaultMaxDist = 0.0075;

struct MatchResult {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<std::uint8_t> pred_matched;  // per pixel, 1 where a prediction was paired
};

/// One-to-one pairing of predicted and ground-truth edge pixels at Euclidean
/// distance <= max_dist * diagonal. Pairs are first taken greedily in ascending
/// distance order (ties: offset order, then gt pixel in row-major order); any
/// remaining augmenting paths are then applied, so tp is a maximum matching.
MatchResult match_boundaries(const BinaryMap& pred, const BinaryMap& gt, double max_dist = kDefaultMaxDist);

/// Counts for one threshold. tp counts matched ground-truth pixels summed over
/// annotators, tp_pred counts predictions matched to at least one annotator.
struct PRPoint {
    double threshold = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp_pred = 0;
    double precision = 1.0;
    double recall = 1.0;
};

/// precision = tp_pred / (tp_pred + fp), recall = tp / (tp + fn); 0/0 -> 1.
PRPoint make_pr_point(double threshold, std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tp_pred);

/// Pools the counts of several points (thresholds must agree).
PRPoint pool_points(const std::vector<PRPoint>& points);

/// 2PR/(P+R), 0 when P+R = 0.
double f_measure(double precision, double recall);
double f_measure(const PRPoint& p);

PRPoint pr_at_threshold(const EdgeMap& pred, const std::vector<BinaryMap>& gts, double t,
                        double max_dist = kDefaultMaxDist);

/// All thresholds for one image, in grid order.
std::vector<PRPoint> pr_curve(const EdgeMap& pred, const std::vector<BinaryMap>& gts,
                              const std::vector<double>& grid, double max_dist = kDefaultMaxDist);

/// n evenly spaced values in [lo, hi].
std::vector<double> threshold_grid(int n = 33, double lo = 0.01, double hi = 0.99);

struct OdsResult {
    double threshold = 0.0;
    double f = 0.0;
    std::size_t index = 0;
};

/// per_image[i][k] is image i at grid threshold k.
OdsResult compute_ods(const std::vector<std::vector<PRPoint>>& per_image);

/// Index of an image's F-maximizing threshold (ties: lowest).
std::size_t best_threshold_index(const std::vector<PRPoint>& curve);

double compute_ois(const std::vector<std::vector<PRPoint>>& per_image);

/// Dataset curve: counts pooled across images at each grid threshold.
std::vector<PRPoint> dataset_curve(const std::vector<std::vector<PRPoint>>& per_image);

/// Area under precision over recall in [0, max recall]: trapezoids between
/// points sorted by recall, and a flat segment from recall 0 up to the lowest
/// observed recall at that point's precision. Nothing beyond max recall.
double compute_ap(std::vector<PRPoint> curve);

struct EvalItem {
    std::string id;
    GrayImage image;
    std::vector<BinaryMap> gts;
};

struct EvalSummary {
    std::string method;
    double ods = 0.0;
    double ods_threshold = 0.0;
    double ois = 0.0;
    double ap = 0.0;
    std::vector<std::string> image_ids;
    std::vector<double> per_image_best_f;
    std::vector<PRPoint> curve;
    std::vector<std::vector<PRPoint>> per_image;
};

using Detector = std::function<EdgeMap(const GrayImage&)>;

/// Summary from precomputed per-image curves.
EvalSummary summarize(std::string method, std::vector<std::string> ids, std::vector<std::vector<PRPoint>> per_image);

/// Runs `detect` over every item (maps must match the gt size) and computes
/// ODS, OIS and AP.
EvalSummary evaluate_method(const std::string& method, const Detector& detect, const std::vector<EvalItem>& items,
                            const std::vector<double>& grid, double max_dist = kDefaultMaxDist);

}  // namespace edgehyb

#endif  // EDGEHYB_EVALUATION_HPP
