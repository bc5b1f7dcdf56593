#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tardy/pipeline.hpp"

namespace {

using namespace tardy;

RunConfig load_run_config(const std::string& config_path, long long seed_flag,
                          const std::string& out_flag, std::size_t jobs_flag,
                          const std::string& format_flag) {
    RunConfig config;
    if (!config_path.empty()) {
        config = RunConfig::from_file(config_path);
    } else {
        config.synth = SynthConfig{};
        config.algorithms = all_variants();
    }
    if (seed_flag >= 0) {
        config.seed = static_cast<std::uint64_t>(seed_flag);
        config.seed_set = true;
    }
    if (!out_flag.empty()) config.out_dir = out_flag;
    if (jobs_flag > 0) config.jobs = jobs_flag;
    if (!format_flag.empty()) {
        if (format_flag == "csv")
            config.format = TableFormat::CSV;
        else if (format_flag == "md")
            config.format = TableFormat::MARKDOWN;
        else if (format_flag == "both")
            config.format = TableFormat::BOTH;
        else
            throw ConfigError("--format must be csv, md or both");
    }
    return config;
}

int cmd_synth(const RunConfig& config, const std::string& out_file) {
    config.validate();
    if (!config.synth) throw ConfigError("synth: config data source must be synth");
    auto dataset = generate_synthetic(*config.synth, config.seed);
    write_csv(dataset, out_file);
    std::size_t timely = 0;
    for (const auto& r : dataset.rows)
        if (r.delay <= 0.0) ++timely;
    std::printf("wrote %zu rows to %s (timely fraction %.3f)\n", dataset.n(),
                out_file.c_str(),
                static_cast<double>(timely) / static_cast<double>(dataset.n()));
    return 0;
}

int cmd_run(const RunConfig& config) {
    config.validate();
    auto outcome = run_experiment(config);
    std::printf("cells: %zu total, %zu reused, %zu failed\n",
                outcome.report.cells.size(), outcome.cells_reused,
                outcome.cells_failed);
    if (outcome.cells_failed > 0) {
        for (const auto& c : outcome.report.cells)
            if (c.failed)
                std::fprintf(stderr, "FAILED %s: %s\n", c.key.id().c_str(),
                             c.error.c_str());
        return 1;
    }
    std::printf("report written under %s/report\n", config.out_dir.c_str());
    std::printf("\ncv-test G gap (most stable first):\n");
    for (const auto& row : cv_test_gap(outcome.report))
        std::printf("  %-8s %-5s %+.4f\n", row.algorithm.c_str(),
                    predictor_set_name(row.pset), row.gap);
    return 0;
}

int cmd_importance(const std::string& model_path, const std::string& out_file) {
    auto model = load_model(model_path);
    auto importance = feature_importance(*model);
    std::FILE* out = out_file.empty() ? stdout : std::fopen(out_file.c_str(), "w");
    if (!out) throw Error("cannot open " + out_file);
    std::fprintf(out, "feature_index,importance\n");
    for (std::size_t f = 0; f < importance.size(); ++f)
        std::fprintf(out, "%zu,%.6f\n", f, importance[f]);
    if (!out_file.empty()) std::fclose(out);
    return 0;
}

int cmd_report(const RunConfig& config) {
    config.validate();
    auto report = report_from_cells(config);
    emit_tables(report, config.out_dir, config.format);
    std::printf("re-emitted %zu cells under %s/report\n", report.cells.size(),
                config.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-prediction benchmark pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    long long seed = -1;
    std::size_t jobs = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "master seed (overrides config)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--jobs", jobs, "worker count (default: hardware)");
    app.add_option("--format", format, "table format: csv, md or both");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    std::string synth_out = "synthetic.csv";
    synth->add_option("--csv", synth_out, "output CSV path");

    auto* run = app.add_subcommand("run", "run the full experiment");
    auto* importance =
        app.add_subcommand("importance", "feature importance of a saved model");
    std::string model_path, importance_out;
    importance->add_option("--model", model_path, "model JSON path")->required();
    importance->add_option("--csv", importance_out, "output CSV (default stdout)");
    auto* report = app.add_subcommand("report", "re-emit tables from persisted cells");

    CLI11_PARSE(app, argc, argv);

    try {
        if (importance->parsed()) return cmd_importance(model_path, importance_out);
        auto config = load_run_config(config_path, seed, out_dir, jobs, format);
        if (synth->parsed()) return cmd_synth(config, synth_out);
        if (run->parsed()) return cmd_run(config);
        if (report->parsed()) return cmd_report(config);
    } catch (const tardy::ConfigError& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
