#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"

namespace incdet::eval {

/// Fraction of positives predicted negative, over examples whose severity
/// lies in `severities`.
inline double fnr(const std::vector<std::uint8_t>& predictions, const datagen::Dataset& data,
                  const std::set<int>& severities) {
    std::size_t positives = 0, missed = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data.examples[i];
        if (e.z != 1 || !severities.contains(e.severity)) continue;
        ++positives;
        if (predictions[i] == 0) ++missed;
    }
    if (positives == 0) throw EvalError("fnr: no positive examples in stratum");
    return static_cast<double>(missed) / static_cast<double>(positives);
}

/// Fraction of negatives predicted positive.
inline double fpr(const std::vector<std::uint8_t>& predictions,
                  const datagen::Dataset& data) {
    std::size_t negatives = 0, flagged = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.examples[i].z != 0) continue;
        ++negatives;
        if (predictions[i] == 1) ++flagged;
    }
    if (negatives == 0) throw EvalError("fpr: no negative examples");
    return static_cast<double>(flagged) / static_cast<double>(negatives);
}

/// Fraction of the flagged-uncertain negatives that are truly positive.
/// Undefined (not zero) when nothing was flagged.
inline std::optional<double> fn_precision(const std::vector<std::size_t>& uncertain_negatives,
                                          const datagen::Dataset& data) {
    if (uncertain_negatives.empty()) return std::nullopt;
    std::size_t hits = 0;
    for (auto i : uncertain_negatives) hits += data.examples[i].z;
    return static_cast<double>(hits) / static_cast<double>(uncertain_negatives.size());
}

/// False negatives that escape the uncertain set (would survive review).
inline std::size_t remaining_false_negatives(const std::vector<std::uint8_t>& predictions,
                                             const datagen::Dataset& data,
                                             const std::vector<std::size_t>& uncertain_negatives) {
    const std::set<std::size_t> flagged(uncertain_negatives.begin(), uncertain_negatives.end());
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (predictions[i] == 0 && data.examples[i].z == 1 && !flagged.contains(i))
            ++remaining;
    return remaining;
}

/// Probability a random positive outscores a random negative, ties counted
/// half (rank-sum form).
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw EvalError("auc: needs both classes");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct StratumStats {
    std::size_t count = 0;
    std::size_t positives = 0;
    std::size_t false_negatives = 0;

    bool operator==(const StratumStats&) const = default;
};

/// One evaluation's measurements plus the sweep coordinates it came from.
/// Rates that have no support (empty stratum, empty uncertain set) are
/// absent rather than zero.
struct MetricsReport {
    std::optional<double> fnr_incipient;
    std::optional<double> fnr_non_incipient;
    std::optional<double> fpr;
    std::optional<double> fn_precision;
    std::optional<double> auc;
    std::size_t total_fn = 0;
    std::size_t certain_fn = 0;
    std::size_t uncertain_negative_count = 0;
    std::array<StratumStats, datagen::kSeverityLevels> strata{};

    // sweep coordinates, filled by the harness
    double q = 0.0;
    double theta = 0.0;
    double rho = 1.0;
    int k = 1;
    std::string metric;
    std::uint64_t seed = 0;
};

inline MetricsReport evaluate(const datagen::Dataset& test,
                              const std::vector<std::uint8_t>& predictions,
                              const std::vector<std::size_t>& uncertain_negatives,
                              const datagen::LabelingPolicy& policy) {
    if (predictions.size() != test.size())
        throw EvalError("evaluate: prediction/label size mismatch");

    MetricsReport report;
    const auto incipient = policy.incipient_severities();

    std::size_t neg = 0, fp = 0;
    std::size_t pos_inc = 0, fn_inc = 0, pos_non = 0, fn_non = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& e = test.examples[i];
        auto& stratum = report.strata[static_cast<std::size_t>(e.severity)];
        ++stratum.count;
        if (e.z == 1) {
            ++stratum.positives;
            const bool miss = predictions[i] == 0;
            if (miss) {
                ++stratum.false_negatives;
                ++report.total_fn;
            }
            if (incipient.contains(e.severity)) {
                ++pos_inc;
                fn_inc += miss;
            } else {
                ++pos_non;
                fn_non += miss;
            }
        } else {
            ++neg;
            fp += predictions[i] == 1;
        }
    }

    if (pos_inc > 0)
        report.fnr_incipient = static_cast<double>(fn_inc) / static_cast<double>(pos_inc);
    if (pos_non > 0)
        report.fnr_non_incipient = static_cast<double>(fn_non) / static_cast<double>(pos_non);
    if (neg > 0) report.fpr = static_cast<double>(fp) / static_cast<double>(neg);

    report.fn_precision = fn_precision(uncertain_negatives, test);
    report.uncertain_negative_count = uncertain_negatives.size();
    report.certain_fn = remaining_false_negatives(predictions, test, uncertain_negatives);
    return report;
}

} // namespace incdet::eval
