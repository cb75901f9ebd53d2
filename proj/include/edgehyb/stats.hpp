#ifndef EDGEHYB_STATS_HPP
#define EDGEHYB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "edgehyb/errors.hpp"

namespace edgehyb {

/// Quantile q in [0,1] of an already sorted sample, linear interpolation
/// between order statistics at position q * (n - 1).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile level outside [0,1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return std::lerp(sorted[lo], sorted[hi], pos - static_cast<double>(lo));
}

inline double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

}  // namespace edgehyb

#endif  // EDGEHYB_STATS_HPP
