#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"

namespace incdet::learners {

struct TreeParams {
    int max_depth = 6;
    int min_samples_split = 2;

    void validate() const {
        if (max_depth < 1) throw ConfigError("tree: max_depth must be >= 1");
        if (min_samples_split < 2) throw ConfigError("tree: min_samples_split must be >= 2");
    }
};

/// CART binary classification tree with Gini impurity. Candidate thresholds
/// are midpoints of consecutive distinct sorted feature values; samples with
/// x[feature] <= threshold go left. Leaf score is the raw positive fraction.
class DecisionTree {
public:
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    static DecisionTree train(const datagen::Dataset& dev, const TreeParams& params) {
        params.validate();
        if (dev.empty()) throw TrainError("tree: empty training set");

        std::size_t positives = 0;
        for (const auto& e : dev.examples) positives += e.z;
        if (positives == 0 || positives == dev.size())
            throw TrainError("tree: single-class training set");

        DecisionTree tree;
        tree.dim_ = dev.dim;
        std::vector<std::size_t> all(dev.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        tree.grow(dev, std::move(all), 0, params);
        return tree;
    }

    double score(const std::vector<double>& x) const {
        if (x.size() != dim_) throw Error("tree: feature dimension mismatch");
        int node = 0;
        while (nodes_[node].feature >= 0) {
            const auto& n = nodes_[node];
            node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[node].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t dim() const { return dim_; }

    static DecisionTree from_parts(std::size_t dim, std::vector<Node> nodes) {
        DecisionTree t;
        t.dim_ = dim;
        t.nodes_ = std::move(nodes);
        if (t.nodes_.empty()) throw ParseError("tree: no nodes");
        return t;
    }

private:
    std::size_t dim_ = 0;
    std::vector<Node> nodes_;

    struct Candidate {
        bool found = false;
        double impurity = 0.0; // weighted Gini of the two children
        int feature = 0;
        double threshold = 0.0;
    };

    // Equal-impurity ties resolve to the lowest feature index, then the
    // lowest threshold; guaranteed by scan order plus strict comparison.
    static Candidate best_split(const datagen::Dataset& data,
                                const std::vector<std::size_t>& idx) {
        Candidate best;
        const std::size_t n = idx.size();
        std::vector<std::pair<double, std::uint8_t>> col(n);

        for (std::size_t j = 0; j < data.dim; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto& e = data.examples[idx[i]];
                col[i] = {e.features[j], e.z};
            }
            std::sort(col.begin(), col.end());

            double left_pos = 0.0;
            double total_pos = 0.0;
            for (const auto& [v, z] : col) total_pos += z;

            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_pos += col[i].second;
                if (col[i].first == col[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(n - i - 1);
                const double rp = total_pos - left_pos;
                const double gini =
                    2.0 * (left_pos * (nl - left_pos) / nl + rp * (nr - rp) / nr) /
                    static_cast<double>(n);
                if (!best.found || gini < best.impurity) {
                    best.found = true;
                    best.impurity = gini;
                    best.feature = static_cast<int>(j);
                    best.threshold = col[i].first + 0.5 * (col[i + 1].first - col[i].first);
                }
            }
        }
        return best;
    }

    int grow(const datagen::Dataset& data, std::vector<std::size_t> idx, int depth,
             const TreeParams& params) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double pos = 0.0;
        for (auto i : idx) pos += data.examples[i].z;
        const double frac = pos / static_cast<double>(idx.size());
        nodes_[static_cast<std::size_t>(id)].value = frac;

        const bool pure = (pos == 0.0 || pos == static_cast<double>(idx.size()));
        if (depth >= params.max_depth || pure ||
            idx.size() < static_cast<std::size_t>(params.min_samples_split))
            return id;

        const Candidate split = best_split(data, idx);
        if (!split.found) return id; // all features constant on this node

        std::vector<std::size_t> left, right;
        for (auto i : idx) {
            const double v = data.examples[i].features[static_cast<std::size_t>(split.feature)];
            (v <= split.threshold ? left : right).push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();

        const int l = grow(data, std::move(left), depth + 1, params);
        const int r = grow(data, std::move(right), depth + 1, params);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

} // namespace incdet::learners
