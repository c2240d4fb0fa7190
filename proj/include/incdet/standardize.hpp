#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"

namespace incdet::datagen {

/// Per-feature affine transform x -> (x - mean) / stddev, fitted on one
/// dataset (the development split) and applied to any other with the same
/// dimensionality. Constant features get stddev 1 so they map to zero;
/// their indices are recorded rather than treated as an error.
class Standardizer {
public:
    void fit(const Dataset& data) {
        if (data.empty()) throw FitError("standardizer: empty dataset");
        const std::size_t d = data.dim;
        const double n = static_cast<double>(data.size());
        mean_.assign(d, 0.0);
        stddev_.assign(d, 0.0);
        constant_features_.clear();

        for (const auto& e : data.examples)
            for (std::size_t j = 0; j < d; ++j) mean_[j] += e.features[j];
        for (std::size_t j = 0; j < d; ++j) mean_[j] /= n;

        for (const auto& e : data.examples)
            for (std::size_t j = 0; j < d; ++j) {
                const double c = e.features[j] - mean_[j];
                stddev_[j] += c * c;
            }
        const double denom = n > 1.0 ? n - 1.0 : 1.0; // sample std
        for (std::size_t j = 0; j < d; ++j) {
            stddev_[j] = std::sqrt(stddev_[j] / denom);
            if (stddev_[j] == 0.0) {
                constant_features_.push_back(j);
                stddev_[j] = 1.0;
            }
        }
    }

    void apply(Dataset& data) const {
        if (mean_.empty()) throw FitError("standardizer: not fitted");
        if (data.dim != mean_.size())
            throw FitError("standardizer: dimension mismatch");
        for (auto& e : data.examples)
            for (std::size_t j = 0; j < mean_.size(); ++j)
                e.features[j] = (e.features[j] - mean_[j]) / stddev_[j];
    }

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }
    const std::vector<std::size_t>& constant_features() const { return constant_features_; }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
    std::vector<std::size_t> constant_features_;
};

} // namespace incdet::datagen
