#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "incdet/errors.hpp"
#include "incdet/uncertainty.hpp"

namespace incdet::decision {

namespace detail {

/// Nearest-rank (1-q)-quantile of values, ascending sort. The small slack
/// keeps exact products like 0.9*10 from landing above their true rank.
inline double nearest_rank_upper(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - q) * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

} // namespace detail

/// Detection threshold such that the fraction of dev negatives scoring
/// strictly above it is at most q (equal up to nearest-rank granularity).
inline double calibrate_tau(const std::vector<double>& dev_negative_scores, double q) {
    if (dev_negative_scores.empty())
        throw CalibrationError("tau: no negative development scores");
    if (!(q >= 0.0 && q < 1.0)) throw ConfigError("tau: q must be in [0,1)");
    if (q == 0.0)
        return *std::max_element(dev_negative_scores.begin(), dev_negative_scores.end());
    return detail::nearest_rank_upper(dev_negative_scores, q);
}

/// Predicted label 1 iff score strictly exceeds tau.
inline std::vector<std::uint8_t> classify(const std::vector<double>& scores, double tau) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > tau ? 1 : 0;
    return out;
}

/// Uncertainty threshold such that the fraction of dev predicted negatives
/// with u strictly above it is at most theta. theta = 1 returns a sentinel
/// below the minimum so every predicted negative counts as uncertain.
inline double calibrate_u_threshold(const std::vector<double>& dev_negative_uncertainty,
                                    double theta) {
    if (dev_negative_uncertainty.empty())
        throw CalibrationError("u-threshold: no predicted-negative development scores");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("u-threshold: theta must be in [0,1]");
    if (theta == 1.0)
        return *std::min_element(dev_negative_uncertainty.begin(),
                                 dev_negative_uncertainty.end()) -
               1.0;
    return detail::nearest_rank_upper(dev_negative_uncertainty, theta);
}

/// Calibrated thresholds plus the sweep coordinates they came from.
struct DecisionPolicy {
    double tau = 0.5;
    double q = 0.05;
    double u_threshold = 0.0;
    double theta = 0.1;
    uncertainty::Metric metric = uncertainty::Metric::mean;
};

/// Indices flagged for review: predicted negative and uncertainty above the
/// calibrated threshold.
inline std::vector<std::size_t> select_uncertain_negatives(
    const std::vector<std::uint8_t>& predictions, const std::vector<double>& uncertainty_scores,
    double u_threshold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == 0 && uncertainty_scores[i] > u_threshold) out.push_back(i);
    return out;
}

} // namespace incdet::decision
