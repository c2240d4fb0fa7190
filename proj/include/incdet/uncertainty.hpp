#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "incdet/ensemble.hpp"
#include "incdet/errors.hpp"

namespace incdet::uncertainty {

enum class Metric { mean, entropy, var, kl };

inline constexpr double kClipEpsilon = 1e-12;

inline std::string metric_name(Metric m) {
    switch (m) {
        case Metric::mean: return "mean";
        case Metric::entropy: return "entropy";
        case Metric::var: return "var";
        case Metric::kl: return "kl";
    }
    return "?";
}

inline Metric metric_from_name(const std::string& name) {
    if (name == "mean") return Metric::mean;
    if (name == "entropy") return Metric::entropy;
    if (name == "var") return Metric::var;
    if (name == "kl") return Metric::kl;
    throw ConfigError("unknown uncertainty metric '" + name + "'");
}

/// Closeness of the combined score to the decision threshold.
inline double u_mean(double y_ensemble, double tau) {
    return 1.0 - std::abs(y_ensemble - tau);
}

/// Binary entropy in nats; exact endpoints use the 0*ln 0 := 0 convention,
/// interior values are clipped away from 0 and 1.
inline double u_entropy(double y) {
    if (y == 0.0 || y == 1.0) return 0.0;
    const double p = std::clamp(y, kClipEpsilon, 1.0 - kClipEpsilon);
    return -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
}

/// Sample variance of one prediction row.
inline double u_var(const std::vector<double>& row) {
    if (row.size() < 2) throw MetricError("var: needs at least two members");
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(row.size() - 1);
}

/// Mean Bernoulli KL divergence of each member prediction from the row
/// mean, both arguments clipped to [eps, 1-eps].
inline double u_kl(const std::vector<double>& row) {
    if (row.size() < 2) throw MetricError("kl: needs at least two members");
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    const double q = std::clamp(mean, kClipEpsilon, 1.0 - kClipEpsilon);

    double total = 0.0;
    for (double v : row) {
        const double p = std::clamp(v, kClipEpsilon, 1.0 - kClipEpsilon);
        total += p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    }
    return total / static_cast<double>(row.size());
}

/// Per-example uncertainty under one metric. tau is the calibrated decision
/// threshold and is only consumed by the mean metric.
inline std::vector<double> scores(const ensemble::PredictionMatrix& matrix, Metric metric,
                                  double tau) {
    const auto combined = ensemble::combine(matrix, ensemble::Voting::soft);
    std::vector<double> out(matrix.rows);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        switch (metric) {
            case Metric::mean: out[i] = u_mean(combined[i], tau); break;
            case Metric::entropy: out[i] = u_entropy(combined[i]); break;
            case Metric::var: out[i] = u_var(matrix.row(i)); break;
            case Metric::kl: out[i] = u_kl(matrix.row(i)); break;
        }
    }
    return out;
}

/// Predicted negatives ordered by uncertainty, most uncertain first; ties
/// keep ascending original index.
inline std::vector<std::size_t> rank_uncertain(const std::vector<double>& scores,
                                               const std::vector<std::size_t>& negatives) {
    std::vector<std::size_t> order = negatives;
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

inline std::vector<std::size_t> union_mean_var(const std::vector<std::size_t>& by_mean,
                                               const std::vector<std::size_t>& by_var) {
    std::set<std::size_t> merged(by_mean.begin(), by_mean.end());
    merged.insert(by_var.begin(), by_var.end());
    return {merged.begin(), merged.end()};
}

} // namespace incdet::uncertainty
