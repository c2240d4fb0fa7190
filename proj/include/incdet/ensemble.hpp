#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"
#include "incdet/model.hpp"
#include "incdet/rng.hpp"

namespace incdet::ensemble {

using LearnerParams = std::variant<learners::TreeParams, learners::NetParams>;

enum class Voting { soft, hard };

inline std::string voting_name(Voting v) { return v == Voting::soft ? "soft" : "hard"; }

inline Voting voting_from_name(const std::string& name) {
    if (name == "soft") return Voting::soft;
    if (name == "hard") return Voting::hard;
    throw ConfigError("unknown voting mode '" + name + "'");
}

/// m x K member predictions: row = data point, column = member.
struct PredictionMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // row-major

    double at(std::size_t i, std::size_t k) const { return values[i * cols + k]; }
    double& at(std::size_t i, std::size_t k) { return values[i * cols + k]; }

    std::vector<double> row(std::size_t i) const {
        return {values.begin() + static_cast<std::ptrdiff_t>(i * cols),
                values.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols)};
    }
};

struct EnsembleModel {
    learners::Family family = learners::Family::tree;
    LearnerParams params;
    int k = 1;
    double max_samples = 0.8;
    std::uint64_t master_seed = 1;
    Voting voting = Voting::soft;
    std::vector<std::uint64_t> member_seeds;
    std::vector<learners::BaseModel> members;
};

namespace detail {

inline datagen::Dataset bootstrap(const datagen::Dataset& dev, std::size_t count, Rng& rng) {
    datagen::Dataset out;
    out.dim = dev.dim;
    out.examples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.examples.push_back(dev.examples[rng.uniform_int(dev.size())]);
    return out;
}

inline bool both_classes(const datagen::Dataset& data) {
    bool pos = false, neg = false;
    for (const auto& e : data.examples) (e.z ? pos : neg) = true;
    return pos && neg;
}

} // namespace detail

/// Trains K independent members, each on ceil(max_samples * n) examples
/// drawn with replacement from dev. A single-class bootstrap is redrawn up
/// to 10 times (the attempt index is part of the seed stream) before the
/// member fails.
inline EnsembleModel train_bagging(const datagen::Dataset& dev, const LearnerParams& params,
                                   int k, double max_samples, std::uint64_t seed,
                                   Voting voting = Voting::soft) {
    if (k < 1) throw ConfigError("ensemble: K must be >= 1");
    if (!(max_samples > 0.0 && max_samples <= 1.0))
        throw ConfigError("ensemble: max_samples must be in (0,1]");
    if (dev.empty()) throw TrainError("ensemble: empty training set");

    EnsembleModel model;
    model.family = std::holds_alternative<learners::TreeParams>(params)
                       ? learners::Family::tree
                       : learners::Family::net;
    model.params = params;
    model.k = k;
    model.max_samples = max_samples;
    model.master_seed = seed;
    model.voting = voting;

    const auto count = static_cast<std::size_t>(
        std::ceil(max_samples * static_cast<double>(dev.size())));

    for (int member = 0; member < k; ++member) {
        model.member_seeds.push_back(derive_seed(seed, "bagging/member", member));

        datagen::Dataset sample;
        bool usable = false;
        for (int attempt = 0; attempt <= 10; ++attempt) {
            Rng rng(derive_seed(seed, "bagging/bootstrap", member, attempt));
            sample = detail::bootstrap(dev, count, rng);
            if (detail::both_classes(sample)) {
                usable = true;
                break;
            }
        }
        if (!usable)
            throw TrainError("ensemble: member " + std::to_string(member) +
                             ": single-class bootstrap after 10 resamples");

        if (model.family == learners::Family::tree) {
            model.members.push_back(
                learners::train_tree(sample, std::get<learners::TreeParams>(params)));
        } else {
            auto net_params = std::get<learners::NetParams>(params);
            net_params.seed = derive_seed(seed, "bagging/net", member);
            model.members.push_back(learners::train_net(sample, net_params));
        }
    }
    return model;
}

inline PredictionMatrix predict_matrix(const EnsembleModel& model,
                                       const datagen::Dataset& data) {
    PredictionMatrix matrix;
    matrix.rows = data.size();
    matrix.cols = model.members.size();
    matrix.values.resize(matrix.rows * matrix.cols);
    for (std::size_t k = 0; k < matrix.cols; ++k) {
        const auto column = learners::score(model.members[k], data);
        for (std::size_t i = 0; i < matrix.rows; ++i) matrix.at(i, k) = column[i];
    }
    return matrix;
}

/// Soft: row mean. Hard: fraction of members voting positive at tau.
inline std::vector<double> combine(const PredictionMatrix& matrix, Voting mode,
                                   double tau = 0.5) {
    std::vector<double> out(matrix.rows);
    const double k = static_cast<double>(matrix.cols);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            const double v = matrix.at(i, c);
            acc += mode == Voting::soft ? v : (v > tau ? 1.0 : 0.0);
        }
        out[i] = acc / k;
    }
    return out;
}

namespace detail {

inline nlohmann::json tree_to_json(const learners::DecisionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes())
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value}});
    return {{"dim", tree.dim()}, {"nodes", std::move(nodes)}};
}

inline learners::DecisionTree tree_from_json(const nlohmann::json& j) {
    std::vector<learners::DecisionTree::Node> nodes;
    for (const auto& n : j.at("nodes")) {
        learners::DecisionTree::Node node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = n.at("value").get<double>();
        nodes.push_back(node);
    }
    return learners::DecisionTree::from_parts(j.at("dim").get<std::size_t>(),
                                              std::move(nodes));
}

inline nlohmann::json net_to_json(const learners::Net& net) {
    return {{"dim", net.dim()},
            {"hidden_width", net.hidden_width()},
            {"params", net.parameters()}};
}

inline learners::Net net_from_json(const nlohmann::json& j) {
    return learners::Net::from_parts(j.at("dim").get<std::size_t>(),
                                     j.at("hidden_width").get<int>(),
                                     j.at("params").get<std::vector<double>>());
}

inline std::string member_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%04zu.json", index);
    return buf;
}

} // namespace detail

/// Writes manifest.json plus one member_NNNN.json per member. JSON numbers
/// use shortest round-trip form, so a reload reproduces predictions
/// bit-exactly.
inline void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "'");

    nlohmann::json manifest;
    manifest["format"] = "incdet-ensemble";
    manifest["version"] = 1;
    manifest["family"] = learners::family_name(model.family);
    manifest["k"] = model.k;
    manifest["max_samples"] = model.max_samples;
    manifest["master_seed"] = model.master_seed;
    manifest["voting"] = voting_name(model.voting);
    manifest["member_seeds"] = model.member_seeds;
    if (model.family == learners::Family::tree) {
        const auto& p = std::get<learners::TreeParams>(model.params);
        manifest["params"] = {{"max_depth", p.max_depth},
                              {"min_samples_split", p.min_samples_split}};
    } else {
        const auto& p = std::get<learners::NetParams>(model.params);
        manifest["params"] = {{"hidden_width", p.hidden_width},
                              {"learning_rate", p.learning_rate},
                              {"epochs", p.epochs},
                              {"batch_size", p.batch_size},
                              {"init_scale", p.init_scale},
                              {"seed", p.seed}};
    }

    const auto dump = [](const std::filesystem::path& path, const nlohmann::json& j) {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out << j.dump(2) << "\n";
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    };

    dump(dir / "manifest.json", manifest);
    for (std::size_t i = 0; i < model.members.size(); ++i) {
        const auto& member = model.members[i];
        nlohmann::json j;
        j["family"] = learners::family_name(member.family);
        j["train_fingerprint"] = member.train_fingerprint;
        j["model"] = member.family == learners::Family::tree
                         ? detail::tree_to_json(std::get<learners::DecisionTree>(member.impl))
                         : detail::net_to_json(std::get<learners::Net>(member.impl));
        dump(dir / detail::member_filename(i), j);
    }
}

inline EnsembleModel load_ensemble(const std::filesystem::path& dir) {
    const auto slurp = [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path.string() + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        return j;
    };

    const auto manifest = slurp(dir / "manifest.json");
    if (manifest.value("format", "") != "incdet-ensemble")
        throw ParseError((dir / "manifest.json").string() + ": not an ensemble manifest");

    EnsembleModel model;
    model.family = learners::family_from_name(manifest.at("family").get<std::string>());
    model.k = manifest.at("k").get<int>();
    model.max_samples = manifest.at("max_samples").get<double>();
    model.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    model.voting = voting_from_name(manifest.at("voting").get<std::string>());
    model.member_seeds = manifest.at("member_seeds").get<std::vector<std::uint64_t>>();

    const auto& p = manifest.at("params");
    if (model.family == learners::Family::tree) {
        learners::TreeParams tp;
        tp.max_depth = p.at("max_depth").get<int>();
        tp.min_samples_split = p.at("min_samples_split").get<int>();
        model.params = tp;
    } else {
        learners::NetParams np;
        np.hidden_width = p.at("hidden_width").get<int>();
        np.learning_rate = p.at("learning_rate").get<double>();
        np.epochs = p.at("epochs").get<int>();
        np.batch_size = p.at("batch_size").get<int>();
        np.init_scale = p.at("init_scale").get<double>();
        np.seed = p.at("seed").get<std::uint64_t>();
        model.params = np;
    }

    for (int i = 0; i < model.k; ++i) {
        const auto j = slurp(dir / detail::member_filename(static_cast<std::size_t>(i)));
        learners::BaseModel member;
        member.family = learners::family_from_name(j.at("family").get<std::string>());
        member.train_fingerprint = j.at("train_fingerprint").get<std::uint64_t>();
        if (member.family == learners::Family::tree)
            member.impl = detail::tree_from_json(j.at("model"));
        else
            member.impl = detail::net_from_json(j.at("model"));
        model.members.push_back(std::move(member));
    }
    return model;
}

} // namespace incdet::ensemble
