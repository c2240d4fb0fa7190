#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"
#include "incdet/rng.hpp"

namespace incdet::datagen {

/// Parameters of the synthetic severity-spectrum generator. The normal
/// cluster sits at the origin; each fault owns a random unit direction and
/// its severity clusters march outward along it.
struct GeneratorConfig {
    std::size_t dim = 2;
    std::size_t n_fault_types = 6;
    std::array<double, 4> offsets = {1.0, 2.0, 3.0, 4.0}; // SL1..SL4 distances
    double cluster_std = 0.6;
    std::size_t samples_per_cell = 150; // per (severity, fault) pair
    std::size_t normal_samples = 1800;  // SL0
    std::uint64_t seed = 1;

    void validate() const {
        if (dim == 0) throw ConfigError("generator: dim must be positive");
        if (n_fault_types == 0) throw ConfigError("generator: n_fault_types must be positive");
        if (samples_per_cell == 0 || normal_samples == 0)
            throw ConfigError("generator: sample counts must be positive");
        if (cluster_std < 0.0) throw ConfigError("generator: cluster_std must be non-negative");
        for (std::size_t l = 0; l < offsets.size(); ++l) {
            if (offsets[l] <= 0.0) throw ConfigError("generator: offsets must be positive");
            if (l > 0 && offsets[l] <= offsets[l - 1])
                throw ConfigError("generator: offsets must be strictly increasing with severity");
        }
    }
};

namespace detail {

inline std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    for (;;) {
        double norm2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& x : v) x *= inv;
            return v;
        }
    }
}

} // namespace detail

/// Draws the synthetic severity-spectrum dataset. Deterministic for a fixed
/// config; every cell consumes its own derived stream.
inline Dataset generate(const GeneratorConfig& config, const LabelingPolicy& policy) {
    config.validate();

    Dataset data;
    data.dim = config.dim;
    data.examples.reserve(config.normal_samples +
                          config.samples_per_cell * config.n_fault_types * 4);

    // One fixed direction per fault, all from the directions stream.
    Rng dir_rng(derive_seed(config.seed, "generator/directions"));
    std::vector<std::vector<double>> directions;
    directions.reserve(config.n_fault_types);
    for (std::size_t f = 0; f < config.n_fault_types; ++f)
        directions.push_back(detail::random_unit_vector(config.dim, dir_rng));

    // SL0: isotropic Gaussian at the origin.
    {
        Rng cell_rng(derive_seed(config.seed, "generator/cell", 0, 0));
        for (std::size_t i = 0; i < config.normal_samples; ++i) {
            LabeledExample e;
            e.features.resize(config.dim);
            for (auto& x : e.features) x = cell_rng.normal(0.0, config.cluster_std);
            e.severity = 0;
            e.fault_id = 0;
            e.z = policy.is_positive(0) ? 1 : 0;
            data.examples.push_back(std::move(e));
        }
    }

    // SL1..SL4 per fault: Gaussian at offsets[l-1] * direction.
    for (int severity = 1; severity <= 4; ++severity) {
        const double offset = config.offsets[static_cast<std::size_t>(severity - 1)];
        for (std::size_t f = 0; f < config.n_fault_types; ++f) {
            Rng cell_rng(derive_seed(config.seed, "generator/cell", severity,
                                     static_cast<std::uint64_t>(f + 1)));
            const auto& u = directions[f];
            for (std::size_t i = 0; i < config.samples_per_cell; ++i) {
                LabeledExample e;
                e.features.resize(config.dim);
                for (std::size_t j = 0; j < config.dim; ++j)
                    e.features[j] = offset * u[j] + cell_rng.normal(0.0, config.cluster_std);
                e.severity = severity;
                e.fault_id = static_cast<int>(f + 1);
                e.z = policy.is_positive(severity) ? 1 : 0;
                data.examples.push_back(std::move(e));
            }
        }
    }
    return data;
}

} // namespace incdet::datagen
