#pragma once

#include <algorithm>
#include <atomic>
#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "incdet/config.hpp"
#include "incdet/csv.hpp"
#include "incdet/dataset.hpp"
#include "incdet/decision.hpp"
#include "incdet/ensemble.hpp"
#include "incdet/errors.hpp"
#include "incdet/eval.hpp"
#include "incdet/generator.hpp"
#include "incdet/partition.hpp"
#include "incdet/rng.hpp"
#include "incdet/standardize.hpp"
#include "incdet/theory.hpp"
#include "incdet/uncertainty.hpp"

namespace incdet::cli {

struct ExperimentConfig {
    // dataset
    std::string source = "generator"; // "generator" | "csv"
    std::string csv_path;
    std::string policy_name = "chiller";
    datagen::GeneratorConfig generator; // its seed field is replaced per sweep seed
    double dev_fraction = 0.5;
    // learner
    learners::Family family = learners::Family::tree;
    learners::TreeParams tree_params;
    learners::NetParams net_params;
    // ensemble
    double max_samples = 0.8;
    ensemble::Voting voting = ensemble::Voting::soft;
    // sweep axes
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<double> rhos = {0.2, 1.0};
    // K = 1 is allowed but errors under the variance metric; the default
    // sweep stays fully runnable.
    std::vector<int> ks = {5, 25};
    std::vector<double> qs = {0.01, 0.05, 0.1};
    std::vector<double> thetas = {0.05, 0.1, 0.2};
    std::vector<uncertainty::Metric> metrics = {uncertainty::Metric::mean,
                                                uncertainty::Metric::var};
    // mean-metric threshold: calibrated tau (default) or fixed 0.5
    bool mean_tau_calibrated = true;

    void validate() const {
        if (source != "generator" && source != "csv")
            throw ConfigError("dataset.source must be 'generator' or 'csv'");
        if (source == "csv" && csv_path.empty())
            throw ConfigError("dataset.csv_path required when source = 'csv'");
        datagen::policy_from_name(policy_name);
        if (source == "generator") generator.validate();
        if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
            throw ConfigError("dataset.dev_fraction must be in (0,1)");
        if (family == learners::Family::tree) tree_params.validate();
        else net_params.validate();
        if (!(max_samples > 0.0 && max_samples <= 1.0))
            throw ConfigError("ensemble.max_samples must be in (0,1]");
        if (seeds.empty() || rhos.empty() || ks.empty() || qs.empty() || thetas.empty() ||
            metrics.empty())
            throw ConfigError("sweep lists must be non-empty");
        for (double r : rhos)
            if (r < 0.0 || r > 1.0) throw ConfigError("sweep.rho values must be in [0,1]");
        for (int k : ks)
            if (k < 1) throw ConfigError("sweep.k values must be >= 1");
        for (double q : qs)
            if (q < 0.0 || q >= 1.0) throw ConfigError("sweep.q values must be in [0,1)");
        for (double t : thetas)
            if (t < 0.0 || t > 1.0) throw ConfigError("sweep.theta values must be in [0,1]");
    }

    static ExperimentConfig from_config(const Config& c) {
        ExperimentConfig e;
        e.source = c.get_string("dataset.source", e.source);
        e.csv_path = c.get_string("dataset.csv_path", e.csv_path);
        e.policy_name = c.get_string("dataset.policy", e.policy_name);
        e.dev_fraction = c.get_double("dataset.dev_fraction", e.dev_fraction);
        auto& g = e.generator;
        g.dim = static_cast<std::size_t>(c.get_int("dataset.dim", static_cast<std::int64_t>(g.dim)));
        g.n_fault_types = static_cast<int>(c.get_int("dataset.fault_types", g.n_fault_types));
        const auto offsets = c.get_double_list(
            "dataset.offsets", {g.offsets[0], g.offsets[1], g.offsets[2], g.offsets[3]});
        if (offsets.size() != g.offsets.size())
            throw ConfigError("dataset.offsets must list exactly " +
                              std::to_string(g.offsets.size()) + " values");
        std::copy(offsets.begin(), offsets.end(), g.offsets.begin());
        g.cluster_std = c.get_double("dataset.cluster_std", g.cluster_std);
        g.seed = static_cast<std::uint64_t>(
            c.get_int("dataset.seed", static_cast<std::int64_t>(g.seed)));
        g.samples_per_cell = static_cast<int>(
            c.get_int("dataset.samples_per_cell", g.samples_per_cell));
        g.normal_samples = static_cast<int>(
            c.get_int("dataset.normal_samples", g.normal_samples));

        e.family = learners::family_from_name(
            c.get_string("learner.family", learners::family_name(e.family)));
        e.tree_params.max_depth = static_cast<int>(
            c.get_int("learner.max_depth", e.tree_params.max_depth));
        e.tree_params.min_samples_split = static_cast<int>(
            c.get_int("learner.min_samples_split", e.tree_params.min_samples_split));
        e.net_params.hidden_width = static_cast<int>(
            c.get_int("learner.hidden_width", e.net_params.hidden_width));
        e.net_params.learning_rate =
            c.get_double("learner.learning_rate", e.net_params.learning_rate);
        e.net_params.epochs = static_cast<int>(c.get_int("learner.epochs", e.net_params.epochs));
        e.net_params.batch_size = static_cast<int>(
            c.get_int("learner.batch_size", e.net_params.batch_size));
        e.net_params.init_scale = c.get_double("learner.init_scale", e.net_params.init_scale);

        e.max_samples = c.get_double("ensemble.max_samples", e.max_samples);
        e.voting = ensemble::voting_from_name(
            c.get_string("ensemble.voting", ensemble::voting_name(e.voting)));

        std::vector<std::int64_t> seed_default(e.seeds.begin(), e.seeds.end());
        const auto seeds = c.get_int_list("sweep.seeds", seed_default);
        e.seeds.assign(seeds.begin(), seeds.end());
        e.rhos = c.get_double_list("sweep.rho", e.rhos);
        std::vector<std::int64_t> k_default(e.ks.begin(), e.ks.end());
        const auto ks = c.get_int_list("sweep.k", k_default);
        e.ks.assign(ks.begin(), ks.end());
        e.qs = c.get_double_list("sweep.q", e.qs);
        e.thetas = c.get_double_list("sweep.theta", e.thetas);
        std::vector<std::string> metric_default;
        for (auto m : e.metrics) metric_default.push_back(uncertainty::metric_name(m));
        e.metrics.clear();
        for (const auto& name : c.get_string_list("sweep.metrics", metric_default))
            e.metrics.push_back(uncertainty::metric_from_name(name));
        const auto mode = c.get_string("sweep.mean_tau", "calibrated");
        if (mode == "calibrated") e.mean_tau_calibrated = true;
        else if (mode == "half") e.mean_tau_calibrated = false;
        else throw ConfigError("sweep.mean_tau must be 'calibrated' or 'half'");
        e.validate();
        return e;
    }
};

/// Everything measured for one successful sweep combination.
struct Measurements {
    double tau = 0.0;
    double u_threshold = 0.0;
    std::optional<double> fnr_incipient;
    std::optional<double> fnr_non_incipient;
    std::optional<double> fpr;
    std::optional<double> fn_precision;
    std::optional<double> auc;
    std::uint64_t total_fn = 0;
    std::uint64_t certain_fn = 0;
    std::uint64_t uncertain_negative_count = 0;
    std::array<eval::StratumStats, datagen::kSeverityLevels> strata{};

    bool operator==(const Measurements&) const = default;
};

/// One row of the results table: full sweep coordinates plus either the
/// measurements or the error that prevented them.
struct Record {
    std::uint64_t seed = 0;
    double rho = 1.0;
    int k = 1;
    double q = 0.0;
    std::string metric;
    double theta = 0.0;
    std::string family;
    double max_samples = 0.8;
    double dev_fraction = 0.5;
    std::string policy;
    std::optional<Measurements> measured;
    std::string error;

    bool operator==(const Record&) const = default;
};

namespace detail {

inline const char* kResultColumns =
    "seed,rho,k,q,metric,theta,family,max_samples,dev_fraction,policy,"
    "tau,u_threshold,fnr_incipient,fnr_non_incipient,fpr,fn_precision,auc,"
    "total_fn,certain_fn,uncertain_negative_count,"
    "sl0_count,sl0_positives,sl0_fn,sl1_count,sl1_positives,sl1_fn,"
    "sl2_count,sl2_positives,sl2_fn,sl3_count,sl3_positives,sl3_fn,"
    "sl4_count,sl4_positives,sl4_fn,error";

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

/// Splits one CSV line honoring double-quoted fields.
inline std::vector<std::string> split_quoted(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"' && cell.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

inline std::string opt_cell(const std::optional<double>& v) {
    return v ? datagen::detail::format_double(*v) : "NA";
}

inline std::string record_to_csv(const Record& r) {
    const auto f = [](double v) { return datagen::detail::format_double(v); };
    std::string line;
    line += std::to_string(r.seed) + ',' + f(r.rho) + ',' + std::to_string(r.k) + ',' +
            f(r.q) + ',' + r.metric + ',' + f(r.theta) + ',' + r.family + ',' +
            f(r.max_samples) + ',' + f(r.dev_fraction) + ',' + r.policy + ',';
    if (r.measured) {
        const auto& m = *r.measured;
        line += f(m.tau) + ',' + f(m.u_threshold) + ',' + opt_cell(m.fnr_incipient) + ',' +
                opt_cell(m.fnr_non_incipient) + ',' + opt_cell(m.fpr) + ',' +
                opt_cell(m.fn_precision) + ',' + opt_cell(m.auc) + ',' +
                std::to_string(m.total_fn) + ',' + std::to_string(m.certain_fn) + ',' +
                std::to_string(m.uncertain_negative_count);
        for (const auto& s : m.strata)
            line += ',' + std::to_string(s.count) + ',' + std::to_string(s.positives) + ',' +
                    std::to_string(s.false_negatives);
    } else {
        for (int i = 0; i < 25; ++i) line += "NA,";
        line.pop_back();
    }
    line += ',' + csv_quote(r.error);
    return line;
}

inline nlohmann::json record_to_json(const Record& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["rho"] = r.rho;
    j["k"] = r.k;
    j["q"] = r.q;
    j["metric"] = r.metric;
    j["theta"] = r.theta;
    j["family"] = r.family;
    j["max_samples"] = r.max_samples;
    j["dev_fraction"] = r.dev_fraction;
    j["policy"] = r.policy;
    j["error"] = r.error;
    const auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
        else j[key] = nullptr;
    };
    if (r.measured) {
        const auto& m = *r.measured;
        j["tau"] = m.tau;
        j["u_threshold"] = m.u_threshold;
        put("fnr_incipient", m.fnr_incipient);
        put("fnr_non_incipient", m.fnr_non_incipient);
        put("fpr", m.fpr);
        put("fn_precision", m.fn_precision);
        put("auc", m.auc);
        j["total_fn"] = m.total_fn;
        j["certain_fn"] = m.certain_fn;
        j["uncertain_negative_count"] = m.uncertain_negative_count;
        auto strata = nlohmann::json::array();
        for (const auto& s : m.strata)
            strata.push_back({{"count", s.count},
                              {"positives", s.positives},
                              {"false_negatives", s.false_negatives}});
        j["strata"] = std::move(strata);
    } else {
        j["tau"] = nullptr;
    }
    return j;
}

} // namespace detail

/// Runs train -> calibrate -> evaluate for every sweep combination under
/// one (seed, rho) cell. Failures are captured per combination; the slice
/// always contains |K| x |q| x |metrics| x |theta| records in sweep order.
inline std::vector<Record> run_cell(const ExperimentConfig& config, std::uint64_t seed,
                                    double rho) {
    const auto policy = datagen::policy_from_name(config.policy_name);

    Record base;
    base.seed = seed;
    base.rho = rho;
    base.family = learners::family_name(config.family);
    base.max_samples = config.max_samples;
    base.dev_fraction = config.dev_fraction;
    base.policy = config.policy_name;

    std::vector<Record> out;
    const auto fail_one = [&](std::size_t ki, std::size_t qi, std::size_t mi, std::size_t ti,
                              const std::string& error) {
        Record r = base;
        r.k = config.ks[ki];
        r.q = config.qs[qi];
        r.metric = uncertainty::metric_name(config.metrics[mi]);
        r.theta = config.thetas[ti];
        r.error = error;
        out.push_back(std::move(r));
    };
    // a failed stage marks exactly the combinations underneath it and lets
    // the sweep continue
    const auto fail_metric = [&](std::size_t ki, std::size_t qi, std::size_t mi,
                                 const std::string& error) {
        for (std::size_t ti = 0; ti < config.thetas.size(); ++ti)
            fail_one(ki, qi, mi, ti, error);
    };
    const auto fail_q = [&](std::size_t ki, std::size_t qi, const std::string& error) {
        for (std::size_t mi = 0; mi < config.metrics.size(); ++mi)
            fail_metric(ki, qi, mi, error);
    };
    const auto fail_k = [&](std::size_t ki, const std::string& error) {
        for (std::size_t qi = 0; qi < config.qs.size(); ++qi) fail_q(ki, qi, error);
    };

    datagen::Dataset dev, test;
    try {
        datagen::Dataset data;
        if (config.source == "generator") {
            auto gen = config.generator;
            gen.seed = seed;
            data = datagen::generate(gen, policy);
        } else {
            data = datagen::ingest_csv(config.csv_path, policy);
        }
        datagen::SplitSpec split_spec;
        split_spec.rho = rho;
        split_spec.dev_fraction = config.dev_fraction;
        split_spec.seed = derive_seed(seed, "experiment/partition");
        auto split = datagen::partition(data, split_spec);
        datagen::Standardizer standardizer;
        standardizer.fit(split.dev);
        standardizer.apply(split.dev);
        standardizer.apply(split.test);
        dev = std::move(split.dev);
        test = std::move(split.test);
    } catch (const std::exception& e) {
        for (std::size_t ki = 0; ki < config.ks.size(); ++ki) fail_k(ki, e.what());
        return out;
    }

    std::vector<std::uint8_t> test_labels(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) test_labels[i] = test.examples[i].z;

    for (std::size_t ki = 0; ki < config.ks.size(); ++ki) {
        const int k = config.ks[ki];
        ensemble::PredictionMatrix dev_matrix, test_matrix;
        std::vector<double> dev_scores, test_scores, dev_negative_scores;
        std::optional<double> auc;
        try {
            const ensemble::LearnerParams params =
                config.family == learners::Family::tree
                    ? ensemble::LearnerParams(config.tree_params)
                    : ensemble::LearnerParams(config.net_params);
            const auto model = ensemble::train_bagging(
                dev, params, k, config.max_samples,
                derive_seed(seed, "experiment/ensemble"), config.voting);
            dev_matrix = ensemble::predict_matrix(model, dev);
            test_matrix = ensemble::predict_matrix(model, test);
            dev_scores = ensemble::combine(dev_matrix, config.voting);
            test_scores = ensemble::combine(test_matrix, config.voting);
            for (std::size_t i = 0; i < dev.size(); ++i)
                if (dev.examples[i].z == 0) dev_negative_scores.push_back(dev_scores[i]);
            try {
                auc = eval::roc_auc(test_scores, test_labels);
            } catch (const EvalError&) {
                auc = std::nullopt;
            }
        } catch (const std::exception& e) {
            fail_k(ki, e.what());
            continue;
        }

        for (std::size_t qi = 0; qi < config.qs.size(); ++qi) {
            const double q = config.qs[qi];
            double tau = 0.0;
            std::vector<std::uint8_t> dev_pred, test_pred;
            try {
                tau = decision::calibrate_tau(dev_negative_scores, q);
                dev_pred = decision::classify(dev_scores, tau);
                test_pred = decision::classify(test_scores, tau);
            } catch (const std::exception& e) {
                fail_q(ki, qi, e.what());
                continue;
            }

            for (std::size_t mi = 0; mi < config.metrics.size(); ++mi) {
                const auto metric = config.metrics[mi];
                std::vector<double> dev_u, test_u, dev_negative_u;
                try {
                    const double mean_tau = config.mean_tau_calibrated ? tau : 0.5;
                    dev_u = uncertainty::scores(dev_matrix, metric, mean_tau);
                    test_u = uncertainty::scores(test_matrix, metric, mean_tau);
                    for (std::size_t i = 0; i < dev.size(); ++i)
                        if (dev_pred[i] == 0) dev_negative_u.push_back(dev_u[i]);
                } catch (const std::exception& e) {
                    fail_metric(ki, qi, mi, e.what());
                    continue;
                }

                for (std::size_t ti = 0; ti < config.thetas.size(); ++ti) {
                    const double theta = config.thetas[ti];
                    Record r = base;
                    r.k = k;
                    r.q = q;
                    r.metric = uncertainty::metric_name(metric);
                    r.theta = theta;
                    try {
                        const double u_th =
                            decision::calibrate_u_threshold(dev_negative_u, theta);
                        const auto uncertain =
                            decision::select_uncertain_negatives(test_pred, test_u, u_th);
                        auto report = eval::evaluate(test, test_pred, uncertain, policy);
                        Measurements m;
                        m.tau = tau;
                        m.u_threshold = u_th;
                        m.fnr_incipient = report.fnr_incipient;
                        m.fnr_non_incipient = report.fnr_non_incipient;
                        m.fpr = report.fpr;
                        m.fn_precision = report.fn_precision;
                        m.auc = auc;
                        m.total_fn = report.total_fn;
                        m.certain_fn = report.certain_fn;
                        m.uncertain_negative_count = report.uncertain_negative_count;
                        m.strata = report.strata;
                        r.measured = std::move(m);
                    } catch (const std::exception& e) {
                        r.error = e.what();
                    }
                    out.push_back(std::move(r));
                }
            }
        }
    }
    return out;
}

/// Full sweep, seeds outermost. With jobs > 1, (seed, rho) cells run on a
/// small thread pool; records land in preallocated slots so the output
/// order never depends on scheduling.
inline std::vector<Record> run_experiment(const ExperimentConfig& config, int jobs = 1) {
    config.validate();
    if (jobs < 1) throw ConfigError("jobs must be >= 1");

    const std::size_t per_cell =
        config.ks.size() * config.qs.size() * config.metrics.size() * config.thetas.size();
    const std::size_t cells = config.seeds.size() * config.rhos.size();
    std::vector<Record> records(cells * per_cell);

    const auto run_task = [&](std::size_t cell) {
        const std::uint64_t seed = config.seeds[cell / config.rhos.size()];
        const double rho = config.rhos[cell % config.rhos.size()];
        auto slice = run_cell(config, seed, rho);
        if (slice.size() != per_cell) throw Error("run: incomplete sweep slice");
        std::move(slice.begin(), slice.end(),
                  records.begin() + static_cast<std::ptrdiff_t>(cell * per_cell));
    };

    if (jobs == 1 || cells == 1) {
        for (std::size_t cell = 0; cell < cells; ++cell) run_task(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto worker = [&] {
            try {
                for (std::size_t cell = next.fetch_add(1); cell < cells;
                     cell = next.fetch_add(1))
                    run_task(cell);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells);
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    return records;
}

/// Writes results.csv and its JSON mirror results.json into out_dir.
inline void emit_results(const std::vector<Record>& records,
                         const std::filesystem::path& out_dir) {
    if (records.empty()) throw Error("emit_results: no records");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + out_dir.string() + "'");

    const auto csv_path = out_dir / "results.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write '" + csv_path.string() + "'");
    csv << detail::kResultColumns << "\n";
    for (const auto& r : records) csv << detail::record_to_csv(r) << "\n";
    if (!csv) throw IoError("write failed for '" + csv_path.string() + "'");

    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) j["records"].push_back(detail::record_to_json(r));
    const auto json_path = out_dir / "results.json";
    std::ofstream js(json_path);
    if (!js) throw IoError("cannot write '" + json_path.string() + "'");
    js << j.dump(2) << "\n";
    if (!js) throw IoError("write failed for '" + json_path.string() + "'");
}

/// Reads a results.csv back into records (inverse of emit_results).
inline std::vector<Record> parse_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != detail::kResultColumns)
        throw ParseError(path.string() + ": unexpected header");

    const auto to_double = [&](const std::string& cell) {
        return datagen::detail::parse_double(cell, 0, "results");
    };
    const auto to_count = [&](const std::string& cell) {
        return static_cast<std::uint64_t>(
            datagen::detail::parse_int(cell, 0, "results"));
    };
    const auto opt_double = [&](const std::string& cell) -> std::optional<double> {
        if (cell == "NA") return std::nullopt;
        return to_double(cell);
    };

    std::vector<Record> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_quoted(line);
        if (cells.size() != 36)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 36 cells, got " + std::to_string(cells.size()));
        Record r;
        r.seed = to_count(cells[0]);
        r.rho = to_double(cells[1]);
        r.k = static_cast<int>(to_count(cells[2]));
        r.q = to_double(cells[3]);
        r.metric = cells[4];
        r.theta = to_double(cells[5]);
        r.family = cells[6];
        r.max_samples = to_double(cells[7]);
        r.dev_fraction = to_double(cells[8]);
        r.policy = cells[9];
        if (cells[10] != "NA") {
            Measurements m;
            m.tau = to_double(cells[10]);
            m.u_threshold = to_double(cells[11]);
            m.fnr_incipient = opt_double(cells[12]);
            m.fnr_non_incipient = opt_double(cells[13]);
            m.fpr = opt_double(cells[14]);
            m.fn_precision = opt_double(cells[15]);
            m.auc = opt_double(cells[16]);
            m.total_fn = to_count(cells[17]);
            m.certain_fn = to_count(cells[18]);
            m.uncertain_negative_count = to_count(cells[19]);
            for (std::size_t s = 0; s < m.strata.size(); ++s) {
                m.strata[s].count = to_count(cells[20 + 3 * s]);
                m.strata[s].positives = to_count(cells[21 + 3 * s]);
                m.strata[s].false_negatives = to_count(cells[22 + 3 * s]);
            }
            r.measured = std::move(m);
        }
        r.error = cells[35];
        out.push_back(std::move(r));
    }
    return out;
}

/// Per-figure style aggregation: group over seeds, report medians.
struct SummaryRow {
    double rho = 1.0;
    int k = 1;
    double q = 0.0;
    std::string metric;
    double theta = 0.0;
    std::size_t n = 0;      // records in the group
    std::size_t errors = 0; // failed records in the group
    std::optional<double> median_fnr_incipient;
    std::optional<double> median_fnr_non_incipient;
    std::optional<double> median_fpr;
    std::optional<double> median_fn_precision;
    std::optional<double> median_auc;
    std::optional<double> median_total_fn;
    std::optional<double> median_certain_fn;
};

namespace detail {

inline std::optional<double> median(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    if (v.size() % 2 == 1) return v[h];
    return 0.5 * (v[h - 1] + v[h]);
}

} // namespace detail

inline std::vector<SummaryRow> summarize(const std::vector<Record>& records) {
    using Key = std::tuple<double, int, double, std::string, double>;
    std::map<Key, std::vector<const Record*>> groups;
    for (const auto& r : records)
        groups[{r.rho, r.k, r.q, r.metric, r.theta}].push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [key, members] : groups) {
        SummaryRow row;
        std::tie(row.rho, row.k, row.q, row.metric, row.theta) = key;
        row.n = members.size();
        std::vector<double> fnr_i, fnr_n, fpr, fnp, auc, tfn, cfn;
        for (const auto* r : members) {
            if (!r->measured) {
                ++row.errors;
                continue;
            }
            const auto& m = *r->measured;
            if (m.fnr_incipient) fnr_i.push_back(*m.fnr_incipient);
            if (m.fnr_non_incipient) fnr_n.push_back(*m.fnr_non_incipient);
            if (m.fpr) fpr.push_back(*m.fpr);
            if (m.fn_precision) fnp.push_back(*m.fn_precision);
            if (m.auc) auc.push_back(*m.auc);
            tfn.push_back(static_cast<double>(m.total_fn));
            cfn.push_back(static_cast<double>(m.certain_fn));
        }
        row.median_fnr_incipient = detail::median(std::move(fnr_i));
        row.median_fnr_non_incipient = detail::median(std::move(fnr_n));
        row.median_fpr = detail::median(std::move(fpr));
        row.median_fn_precision = detail::median(std::move(fnp));
        row.median_auc = detail::median(std::move(auc));
        row.median_total_fn = detail::median(std::move(tfn));
        row.median_certain_fn = detail::median(std::move(cfn));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "rho,k,q,metric,theta,n,errors,median_fnr_incipient,median_fnr_non_incipient,"
           "median_fpr,median_fn_precision,median_auc,median_total_fn,median_certain_fn\n";
    const auto f = [](double v) { return datagen::detail::format_double(v); };
    for (const auto& r : rows)
        out << f(r.rho) << ',' << r.k << ',' << f(r.q) << ',' << r.metric << ','
            << f(r.theta) << ',' << r.n << ',' << r.errors << ','
            << detail::opt_cell(r.median_fnr_incipient) << ','
            << detail::opt_cell(r.median_fnr_non_incipient) << ','
            << detail::opt_cell(r.median_fpr) << ','
            << detail::opt_cell(r.median_fn_precision) << ','
            << detail::opt_cell(r.median_auc) << ','
            << detail::opt_cell(r.median_total_fn) << ','
            << detail::opt_cell(r.median_certain_fn) << "\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

struct TheoryConfig {
    std::vector<double> c_values = {4.0, 10.0, 20.0};
    std::vector<double> alpha_fractions = {0.05, 0.2, 0.4, 0.5};
    std::vector<int> ks = {5, 25, 100};
    std::size_t trials = 20000;
    std::uint64_t seed = 7;

    void validate() const {
        if (c_values.empty() || alpha_fractions.empty() || ks.empty())
            throw ConfigError("theory: grids must be non-empty");
        if (trials == 0) throw ConfigError("theory: trials must be >= 1");
        for (double c : c_values)
            if (!(c > 0.0)) throw ConfigError("theory: c values must be positive");
        for (double f : alpha_fractions)
            if (!(f > 0.0 && f <= 0.5))
                throw ConfigError("theory: alpha fractions must be in (0, 0.5]");
        for (int k : ks)
            if (k < 2) throw ConfigError("theory: K values must be >= 2");
    }

    static TheoryConfig from_config(const Config& c) {
        TheoryConfig t;
        t.c_values = c.get_double_list("theory.c", t.c_values);
        t.alpha_fractions = c.get_double_list("theory.alpha_fractions", t.alpha_fractions);
        std::vector<std::int64_t> k_default(t.ks.begin(), t.ks.end());
        const auto ks = c.get_int_list("theory.k", k_default);
        t.ks.assign(ks.begin(), ks.end());
        t.trials = static_cast<std::size_t>(
            c.get_int("theory.trials", static_cast<std::int64_t>(t.trials)));
        t.seed = static_cast<std::uint64_t>(
            c.get_int("theory.seed", static_cast<std::int64_t>(t.seed)));
        t.validate();
        return t;
    }
};

/// Runs the Theorem verification grid and writes grid.csv + summary.json.
inline theory::GridReport run_theory(const TheoryConfig& config,
                                     const std::filesystem::path& out_dir) {
    config.validate();
    std::vector<std::vector<double>> grids;
    for (double c : config.c_values) {
        std::vector<double> alphas;
        for (double f : config.alpha_fractions) alphas.push_back(f * c);
        grids.push_back(std::move(alphas));
    }
    auto report = theory::verify_theorem_grid(config.c_values, grids, config.ks,
                                              config.trials, config.seed);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + out_dir.string() + "'");
    theory::write_grid_csv(report, out_dir / "grid.csv");
    theory::write_grid_summary(report, out_dir / "summary.json");
    return report;
}

} // namespace incdet::cli
