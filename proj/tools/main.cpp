#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incdet/incdet.hpp"

namespace {

namespace fs = std::filesystem;
using namespace incdet;

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
    const auto config = cli::ExperimentConfig::from_config(cli::Config::parse_file(config_path));
    if (config.source != "generator") {
        std::cerr << "generate: dataset.source must be 'generator'\n";
        return 1;
    }
    const auto policy = datagen::policy_from_name(config.policy_name);
    const auto data = datagen::generate(config.generator, policy);
    fs::create_directories(out_dir);
    const auto path = fs::path(out_dir) / "dataset.csv";
    datagen::write_csv(path.string(), data);
    std::cout << "wrote " << data.size() << " examples to " << path.string() << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, std::string out_dir, int jobs) {
    const auto raw = cli::Config::parse_file(config_path);
    const auto config = cli::ExperimentConfig::from_config(raw);
    if (out_dir.empty()) out_dir = raw.get_string("output.dir", "out");

    const auto records = cli::run_experiment(config, jobs);
    cli::emit_results(records, out_dir);

    std::size_t failed = 0;
    for (const auto& r : records)
        if (!r.error.empty()) {
            if (failed == 0) std::cerr << "failed combinations:\n";
            std::cerr << "  seed=" << r.seed << " rho=" << r.rho << " k=" << r.k
                      << " q=" << r.q << " metric=" << r.metric << " theta=" << r.theta
                      << ": " << r.error << "\n";
            ++failed;
        }
    std::cout << records.size() << " records (" << failed << " failed) -> " << out_dir
              << "/results.csv\n";
    return failed == 0 ? 0 : 1;
}

int cmd_theory(const std::string& config_path, std::string out_dir) {
    const auto raw = cli::Config::parse_file(config_path);
    const auto config = cli::TheoryConfig::from_config(raw);
    if (out_dir.empty()) out_dir = raw.get_string("output.dir", "out");

    const auto report = cli::run_theory(config, out_dir);
    std::cout << report.rows.size() << " grid rows -> " << out_dir << "/grid.csv\n"
              << "delta_ordering=" << (report.delta_ordering ? "true" : "false")
              << " mean_le_var=" << (report.mean_le_var ? "true" : "false")
              << " scaling_bounded=" << (report.scaling_bounded ? "true" : "false")
              << " vanishing_with_k=" << (report.vanishing_with_k ? "true" : "false") << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& results, const std::string& out_dir) {
    std::vector<cli::Record> records;
    for (const auto& path : results) {
        auto part = cli::parse_results_csv(path);
        records.insert(records.end(), std::make_move_iterator(part.begin()),
                       std::make_move_iterator(part.end()));
    }
    if (records.empty()) {
        std::cerr << "report: no records found\n";
        return 1;
    }
    const auto rows = cli::summarize(records);
    fs::create_directories(out_dir);
    const auto path = fs::path(out_dir) / "summary.csv";
    cli::write_summary_csv(rows, path);
    std::cout << rows.size() << " summary rows -> " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble-based incipient anomaly detection experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::vector<std::string> results;

    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset CSV");
    generate->add_option("--config", config_path, "config file")->required();
    generate->add_option("--out", out_dir, "output directory")->default_val("out");

    auto* run = app.add_subcommand("run", "Run the experiment sweep");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (default from config)");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* theory = app.add_subcommand("theory", "Run the ranking-theory verification grid");
    theory->add_option("--config", config_path, "config file")->required();
    theory->add_option("--out", out_dir, "output directory (default from config)");

    auto* report = app.add_subcommand("report", "Aggregate results CSVs into medians");
    report->add_option("--results", results, "results.csv paths")->required();
    report->add_option("--out", out_dir, "output directory")->default_val("report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(config_path, out_dir);
        if (run->parsed()) return cmd_run(config_path, out_dir, jobs);
        if (theory->parsed()) return cmd_theory(config_path, out_dir);
        if (report->parsed()) return cmd_report(results, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
