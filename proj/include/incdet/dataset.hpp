#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "incdet/errors.hpp"

namespace incdet::datagen {

constexpr int kSeverityLevels = 5; // SL0 (normal) .. SL4 (most severe)

/// Maps severity levels to the binary anomaly label.
struct LabelingPolicy {
    std::set<int> positive_severities;

    /// All fault severities count as anomalies (tabular sensor data).
    static LabelingPolicy chiller() { return {{1, 2, 3, 4}}; }

    /// SL1 is non-referable and stays in the negative class.
    static LabelingPolicy dr() { return {{2, 3, 4}}; }

    bool is_positive(int severity) const { return positive_severities.count(severity) > 0; }

    /// Incipient severities are the low grades (SL1/SL2) that the policy
    /// still counts as anomalies.
    std::set<int> incipient_severities() const {
        std::set<int> out;
        for (int s : {1, 2})
            if (is_positive(s)) out.insert(s);
        return out;
    }
};

inline LabelingPolicy policy_from_name(const std::string& name) {
    if (name == "chiller") return LabelingPolicy::chiller();
    if (name == "dr") return LabelingPolicy::dr();
    throw ConfigError("unknown labeling policy '" + name + "' (expected chiller or dr)");
}

/// One observation: feature vector, binary label, severity grade, fault tag.
/// severity == 0 iff fault_id == 0 (normal condition).
struct LabeledExample {
    std::vector<double> features;
    std::uint8_t z = 0; // 0 normal, 1 anomaly
    int severity = 0;   // 0..4
    int fault_id = 0;   // 0 reserved for normal
};

struct Dataset {
    std::size_t dim = 0;
    std::vector<LabeledExample> examples;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }

    std::size_t count_severity(int severity) const {
        std::size_t n = 0;
        for (const auto& e : examples) n += (e.severity == severity);
        return n;
    }

    std::vector<std::size_t> indices_with_severity(int severity) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < examples.size(); ++i)
            if (examples[i].severity == severity) out.push_back(i);
        return out;
    }
};

inline void validate_example(const LabeledExample& e, const LabelingPolicy& policy) {
    if (e.severity < 0 || e.severity >= kSeverityLevels)
        throw ParseError("severity " + std::to_string(e.severity) + " out of range 0..4");
    if ((e.severity == 0) != (e.fault_id == 0))
        throw ParseError("severity/fault mismatch: severity " + std::to_string(e.severity) +
                         " with fault_id " + std::to_string(e.fault_id));
    if (e.z != (policy.is_positive(e.severity) ? 1 : 0))
        throw ParseError("label does not match policy for severity " + std::to_string(e.severity));
}

} // namespace incdet::datagen
