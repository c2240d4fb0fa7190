#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"
#include "incdet/rng.hpp"

namespace incdet::datagen {

/// Development/test split parameters. rho controls how much of the
/// dev-side incipient data (SL1, SL2) is retained; the rest is discarded,
/// never moved to test.
struct SplitSpec {
    double rho = 1.0;
    double dev_fraction = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (rho < 0.0 || rho > 1.0) throw ConfigError("split: rho must be in [0,1]");
        if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
            throw ConfigError("split: dev_fraction must be in (0,1)");
    }
};

struct Split {
    Dataset dev;
    Dataset test;
};

/// Stratified split by severity level. Every stratum is shuffled with a
/// stream keyed only by (seed, severity), so retention is a prefix of a
/// rho-independent order: dev(rho1) incipient examples nest inside
/// dev(rho2) for rho1 < rho2.
inline Split partition(const Dataset& data, const SplitSpec& spec) {
    spec.validate();

    Split out;
    out.dev.dim = data.dim;
    out.test.dim = data.dim;

    for (int severity = 0; severity < kSeverityLevels; ++severity) {
        auto idx = data.indices_with_severity(severity);
        if (idx.empty())
            throw PartitionError("empty severity stratum SL" + std::to_string(severity));

        Rng rng(derive_seed(spec.seed, "partition/stratum", severity));
        rng.shuffle(idx);

        const std::size_t n = idx.size();
        std::size_t n_dev = static_cast<std::size_t>(
            std::floor(spec.dev_fraction * static_cast<double>(n) + 0.5));
        if (n_dev == n) n_dev = n - 1; // keep every stratum represented in test

        std::size_t n_keep = n_dev;
        const bool incipient = (severity == 1 || severity == 2);
        if (incipient)
            n_keep = static_cast<std::size_t>(
                std::floor(spec.rho * static_cast<double>(n_dev) + 1e-9));

        for (std::size_t i = 0; i < n_keep; ++i)
            out.dev.examples.push_back(data.examples[idx[i]]);
        // dev-side incipient examples beyond n_keep are discarded
        for (std::size_t i = n_dev; i < n; ++i)
            out.test.examples.push_back(data.examples[idx[i]]);
    }
    return out;
}

} // namespace incdet::datagen
