#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "incdet/incdet.hpp"

using namespace incdet;
using namespace incdet::cli;

namespace {

ExperimentConfig small_sweep() {
    ExperimentConfig c;
    c.generator.dim = 2;
    c.generator.n_fault_types = 2;
    c.generator.samples_per_cell = 12;
    c.generator.normal_samples = 60;
    c.generator.cluster_std = 0.3;
    c.tree_params.max_depth = 4;
    c.seeds = {11, 12};
    c.rhos = {0.0, 0.2, 1.0};
    c.ks = {1, 2};
    c.qs = {0.05, 0.1};
    c.thetas = {0.1};
    c.metrics = {uncertainty::Metric::mean, uncertainty::Metric::entropy};
    return c;
}

std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("incdet_exp_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("sweep emits one record per combination in declared order") {
    const auto config = small_sweep();
    const auto records = run_experiment(config);
    REQUIRE(records.size() == 48); // 2 seeds x 3 rho x 2 K x 2 q x 1 theta x 2 metrics

    const std::size_t per_cell = 8;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t cell = i / per_cell;
        const std::size_t within = i % per_cell;
        CHECK(r.seed == config.seeds[cell / config.rhos.size()]);
        CHECK(r.rho == config.rhos[cell % config.rhos.size()]);
        CHECK(r.k == config.ks[within / 4]);
        CHECK(r.q == config.qs[(within % 4) / 2]);
        CHECK(r.metric == uncertainty::metric_name(config.metrics[within % 2]));
        CHECK(r.theta == 0.1);
        CHECK(r.family == "tree");
        CHECK(r.policy == "chiller");
        CHECK(r.max_samples == 0.8);
        CHECK(r.dev_fraction == 0.5);
        REQUIRE(r.measured.has_value());
        CHECK(r.error.empty());
    }
}

TEST_CASE("measured records satisfy basic accounting") {
    const auto records = run_experiment(small_sweep());
    for (const auto& r : records) {
        REQUIRE(r.measured.has_value());
        const auto& m = *r.measured;
        std::uint64_t count = 0, fn = 0;
        for (const auto& s : m.strata) {
            count += s.count;
            fn += s.false_negatives;
            CHECK(s.false_negatives <= s.positives);
        }
        CHECK(count == 78); // test half of 60 + 12*2*4 examples
        CHECK(fn == m.total_fn);
        CHECK(m.certain_fn <= m.total_fn);
        if (m.fnr_incipient) CHECK((*m.fnr_incipient >= 0.0 && *m.fnr_incipient <= 1.0));
        if (m.fpr) CHECK((*m.fpr >= 0.0 && *m.fpr <= 1.0));
        if (m.auc) CHECK((*m.auc >= 0.0 && *m.auc <= 1.0));
    }
}

TEST_CASE("rerunning the same config reproduces the results byte for byte") {
    const auto config = small_sweep();
    const auto first = run_experiment(config);
    const auto second = run_experiment(config);
    CHECK(first == second);

    const auto dir_a = temp_dir("rerun_a");
    const auto dir_b = temp_dir("rerun_b");
    emit_results(first, dir_a);
    emit_results(second, dir_b);
    CHECK(slurp(dir_a / "results.csv") == slurp(dir_b / "results.csv"));
    CHECK(slurp(dir_a / "results.json") == slurp(dir_b / "results.json"));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("parallel cells produce the same records as serial") {
    const auto config = small_sweep();
    CHECK(run_experiment(config, 1) == run_experiment(config, 3));
    CHECK_THROWS_AS(run_experiment(config, 0), ConfigError);
}

TEST_CASE("a combination that cannot be measured fails alone") {
    auto config = small_sweep();
    config.seeds = {11};
    config.rhos = {0.5};
    config.metrics = {uncertainty::Metric::mean, uncertainty::Metric::var};
    const auto records = run_experiment(config);
    REQUIRE(records.size() == 8);

    for (const auto& r : records) {
        if (r.k == 1 && r.metric == "var") {
            CHECK_FALSE(r.measured.has_value());
            CHECK_THAT(r.error, Catch::Matchers::ContainsSubstring(
                                    "needs at least two members"));
        } else {
            CHECK(r.measured.has_value());
            CHECK(r.error.empty());
        }
    }
}

TEST_CASE("a failing dataset stage marks every record in its cell") {
    ExperimentConfig config;
    config.source = "csv";
    config.csv_path = "/nonexistent/input.csv";
    config.seeds = {1};
    config.rhos = {0.2};
    config.ks = {1, 3};
    config.qs = {0.05};
    config.thetas = {0.1};
    config.metrics = {uncertainty::Metric::mean};

    const auto records = run_experiment(config);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        CHECK_FALSE(r.measured.has_value());
        CHECK_THAT(r.error, Catch::Matchers::ContainsSubstring("cannot open"));
    }
    CHECK(records[0].k == 1);
    CHECK(records[1].k == 3);
}

TEST_CASE("results csv round trips records exactly") {
    auto config = small_sweep();
    config.seeds = {11};
    config.rhos = {0.5};
    config.metrics = {uncertainty::Metric::mean, uncertainty::Metric::var};
    const auto records = run_experiment(config); // mixes measured and failed rows

    const auto dir = temp_dir("roundtrip");
    emit_results(records, dir);

    const auto text = slurp(dir / "results.csv");
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == records.size() + 1);
    CHECK(text.rfind(cli::detail::kResultColumns, 0) == 0);

    const auto back = parse_results_csv(dir / "results.csv");
    CHECK(back == records);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv quoting survives commas and quotes in error text") {
    Record r;
    r.seed = 3;
    r.rho = 0.5;
    r.k = 2;
    r.q = 0.1;
    r.metric = "mean";
    r.theta = 0.0;
    r.family = "tree";
    r.policy = "chiller";
    r.error = "bad \"stuff\", with commas";

    const auto dir = temp_dir("quoting");
    const auto path = dir / "results.csv";
    {
        std::ofstream out(path);
        out << cli::detail::kResultColumns << "\n" << cli::detail::record_to_csv(r) << "\n";
    }
    const auto back = parse_results_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == r);
    std::filesystem::remove_all(dir);
}

TEST_CASE("parse rejects foreign and damaged results files") {
    const auto dir = temp_dir("badresults");
    const auto path = dir / "results.csv";
    {
        std::ofstream out(path);
        out << "a,b,c\n1,2,3\n";
    }
    CHECK_THROWS_WITH(parse_results_csv(path),
                      Catch::Matchers::ContainsSubstring("unexpected header"));
    {
        std::ofstream out(path);
        out << cli::detail::kResultColumns << "\n1,2,3\n";
    }
    CHECK_THROWS_WITH(parse_results_csv(path),
                      Catch::Matchers::ContainsSubstring("expected 36 cells, got 3"));
    CHECK_THROWS_AS(parse_results_csv(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("summaries take medians over seeds and count failures") {
    const auto make = [](std::uint64_t seed, double fnr_i, std::optional<double> fnp,
                         std::uint64_t total_fn) {
        Record r;
        r.seed = seed;
        r.rho = 0.2;
        r.k = 5;
        r.q = 0.05;
        r.metric = "mean";
        r.theta = 0.1;
        Measurements m;
        m.fnr_incipient = fnr_i;
        m.fpr = 0.04 + 0.01 * static_cast<double>(seed);
        m.fn_precision = fnp;
        m.total_fn = total_fn;
        m.certain_fn = total_fn;
        r.measured = m;
        return r;
    };

    std::vector<Record> records;
    records.push_back(make(1, 0.4, std::nullopt, 4));
    records.push_back(make(2, 0.1, 0.5, 2));
    records.push_back(make(3, 0.3, 0.7, 9));
    Record failed;
    failed.seed = 1;
    failed.rho = 0.2;
    failed.k = 1;
    failed.q = 0.05;
    failed.metric = "var";
    failed.theta = 0.1;
    failed.error = "var: needs at least two members";
    records.push_back(failed);
    records.push_back(failed);

    const auto rows = summarize(records);
    REQUIRE(rows.size() == 2);

    const auto& errs = rows[0].metric == "var" ? rows[0] : rows[1];
    const auto& good = rows[0].metric == "var" ? rows[1] : rows[0];

    CHECK(good.n == 3);
    CHECK(good.errors == 0);
    REQUIRE(good.median_fnr_incipient.has_value());
    CHECK(*good.median_fnr_incipient == 0.3);
    REQUIRE(good.median_fpr.has_value());
    CHECK_THAT(*good.median_fpr, Catch::Matchers::WithinAbs(0.06, 1e-12));
    REQUIRE(good.median_fn_precision.has_value());
    CHECK_THAT(*good.median_fn_precision, Catch::Matchers::WithinAbs(0.6, 1e-12));
    CHECK(*good.median_total_fn == 4.0);
    CHECK_FALSE(good.median_auc.has_value());

    CHECK(errs.n == 2);
    CHECK(errs.errors == 2);
    CHECK_FALSE(errs.median_fnr_incipient.has_value());
    CHECK_FALSE(errs.median_total_fn.has_value());

    const auto dir = temp_dir("summary");
    write_summary_csv(rows, dir / "summary.csv");
    const auto text = slurp(dir / "summary.csv");
    CHECK(text.rfind("rho,k,q,metric,theta,n,errors,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("even-sized groups average the middle pair") {
    std::vector<Record> records;
    for (int i = 0; i < 4; ++i) {
        Record r;
        r.seed = static_cast<std::uint64_t>(i);
        r.rho = 1.0;
        r.k = 3;
        r.q = 0.01;
        r.metric = "entropy";
        r.theta = 0.0;
        Measurements m;
        m.fnr_incipient = 0.1 * (i + 1);
        r.measured = m;
        records.push_back(r);
    }
    const auto rows = summarize(records);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].median_fnr_incipient.has_value());
    CHECK_THAT(*rows[0].median_fnr_incipient, Catch::Matchers::WithinAbs(0.25, 1e-12));
}

TEST_CASE("theory run writes the grid artifacts") {
    TheoryConfig config;
    config.c_values = {10.0};
    config.alpha_fractions = {0.1, 0.2};
    config.ks = {2, 4};
    config.trials = 2000;
    config.seed = 5;

    const auto dir = temp_dir("theory");
    const auto report = run_theory(config, dir);
    CHECK(report.rows.size() == 2); // one alpha pair x two K values

    CHECK(std::filesystem::exists(dir / "grid.csv"));
    const auto summary = slurp(dir / "summary.json");
    const auto j = nlohmann::json::parse(summary);
    CHECK(j["rows"].get<std::size_t>() == report.rows.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("generated sweep keeps non-incipient misses rare") {
    ExperimentConfig config;
    config.generator.n_fault_types = 3;
    config.generator.samples_per_cell = 40;
    config.generator.normal_samples = 240;
    config.seeds = {21};
    config.rhos = {0.2, 1.0};
    config.ks = {5};
    config.qs = {0.05};
    config.thetas = {0.1};
    config.metrics = {uncertainty::Metric::mean};

    const auto records = run_experiment(config);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        REQUIRE(r.measured.has_value());
        REQUIRE(r.measured->fnr_non_incipient.has_value());
        CHECK(*r.measured->fnr_non_incipient <= 0.01);
    }
}
