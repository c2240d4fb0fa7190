#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <variant>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"
#include "incdet/net.hpp"
#include "incdet/tree.hpp"

namespace incdet::learners {

enum class Family { tree, net };

inline std::string family_name(Family f) { return f == Family::tree ? "tree" : "net"; }

inline Family family_from_name(const std::string& name) {
    if (name == "tree") return Family::tree;
    if (name == "net") return Family::net;
    throw ConfigError("unknown learner family '" + name + "'");
}

/// FNV-1a over the training examples' raw bytes; identifies which data a
/// model was fitted on without storing the data.
inline std::uint64_t fingerprint(const datagen::Dataset& data) {
    std::uint64_t h = 1469598103934665603ull;
    const auto feed = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t dim = data.dim;
    feed(&dim, sizeof dim);
    for (const auto& e : data.examples) {
        feed(e.features.data(), e.features.size() * sizeof(double));
        feed(&e.z, sizeof e.z);
        const std::int32_t sev = e.severity, fid = e.fault_id;
        feed(&sev, sizeof sev);
        feed(&fid, sizeof fid);
    }
    return h;
}

/// A trained base learner: family tag, training-data fingerprint, and the
/// immutable model itself.
struct BaseModel {
    Family family = Family::tree;
    std::uint64_t train_fingerprint = 0;
    std::variant<DecisionTree, Net> impl;

    double score(const std::vector<double>& x) const {
        return std::visit([&x](const auto& m) { return m.score(x); }, impl);
    }

    std::size_t dim() const {
        return std::visit([](const auto& m) { return m.dim(); }, impl);
    }
};

inline BaseModel train_tree(const datagen::Dataset& dev, const TreeParams& params) {
    BaseModel m;
    m.family = Family::tree;
    m.train_fingerprint = fingerprint(dev);
    m.impl = DecisionTree::train(dev, params);
    return m;
}

inline BaseModel train_net(const datagen::Dataset& dev, const NetParams& params) {
    BaseModel m;
    m.family = Family::net;
    m.train_fingerprint = fingerprint(dev);
    m.impl = Net::train(dev, params);
    return m;
}

inline std::vector<double> score(const BaseModel& model, const datagen::Dataset& data) {
    if (data.dim != model.dim()) throw Error("score: feature dimension mismatch");
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& e : data.examples) out.push_back(model.score(e.features));
    return out;
}

} // namespace incdet::learners
