#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tardy/pipeline.hpp"
#include "tardy/rng.hpp"

using namespace tardy;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(const std::string& out) {
    RunConfig c;
    c.synth = SynthConfig{};
    c.synth->n_assignments = 240;
    c.synth->n_students = 40;
    c.synth->n_courses = 20;
    c.seed = 11;
    c.seed_set = true;
    c.algorithms = {"KNN", "RT"};
    c.psets = {PredictorSet::OBJ};
    c.n_splits = 2;
    c.cv_folds = 4;
    c.reduced_grids = true;
    c.out_dir = out;
    c.jobs = 2;
    return c;
}

}  // namespace

TEST_CASE("run config validation") {
    RunConfig c;
    c.synth = SynthConfig{};
    c.algorithms = {"KNN"};
    CHECK_THROWS_AS(c.validate(), ConfigError);  // seed required
    c.seed = 1;
    c.seed_set = true;
    c.validate();
    c.algorithms = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.algorithms = {"NOPE"};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.algorithms = {"KNN"};
    c.psets = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("run config json round-trip with defaults") {
    auto c = RunConfig::from_json({{"seed", 9}});
    CHECK(c.seed == 9);
    CHECK(c.algorithms.size() == 14);  // defaults to every variant
    CHECK(c.psets.size() == 3);
    CHECK(c.cv_folds == 4);
    CHECK(c.n_splits == 10);
    CHECK(c.synth.has_value());
    CHECK(c.synth->n_assignments == 1107);

    nlohmann::json j = {
        {"seed", 3},
        {"data", {{"source", "synth"}, {"synth", {{"n_assignments", 500}}}}},
        {"algorithms", {"RF", "SVR-VS"}},
        {"predictor_sets", {"obj", "comb"}},
        {"cv_folds", 3},
        {"n_splits", 4},
        {"normalization_scope", "train_only"},
        {"format", "csv"},
    };
    auto full = RunConfig::from_json(j);
    CHECK(full.synth->n_assignments == 500);
    CHECK(full.algorithms == std::vector<std::string>{"RF", "SVR-VS"});
    CHECK(full.psets.size() == 2);
    CHECK(full.scope == NormalizationScope::TRAIN_ONLY);
    CHECK(full.format == TableFormat::CSV);

    CHECK_THROWS_AS(RunConfig::from_json({{"seed", 1}, {"format", "xml"}}),
                    ConfigError);
    CHECK_THROWS_AS(
        RunConfig::from_json({{"seed", 1}, {"data", {{"source", "sql"}}}}),
        ConfigError);
}

TEST_CASE("cell seeds are independent of the surrounding run") {
    auto a = cell_seed(7, 3, PredictorSet::OBJ, "RF");
    CHECK(a == cell_seed(7, 3, PredictorSet::OBJ, "RF"));
    CHECK(a != cell_seed(7, 4, PredictorSet::OBJ, "RF"));
    CHECK(a != cell_seed(7, 3, PredictorSet::COMB, "RF"));
    CHECK(a != cell_seed(7, 3, PredictorSet::OBJ, "GBM"));
    CHECK(a != cell_seed(8, 3, PredictorSet::OBJ, "RF"));
}

TEST_CASE("grid overrides replace the default grid") {
    RunConfig c;
    c.grid_overrides = {{"KNN", {{"num", {{"k", {3, 7}}}},
                                 {"str", {{"weighting", {"uniform"}}}}}}};
    auto grid = grid_for(c, "KNN", {"a", "b"});
    REQUIRE(grid.configs.size() == 2);
    CHECK(grid.configs[0].get_num("k") == 3);
    CHECK(grid.configs[1].get_num("k") == 7);

    // SVR override keeps the variant's kernel pinned
    c.grid_overrides = {{"SVR-RBF", {{"num", {{"C", {1.0}}, {"epsilon", {0.1}},
                                              {"gamma", {0.5}}}}}}};
    auto svr = grid_for(c, "SVR-RBF", {"a", "b"});
    REQUIRE(svr.configs.size() == 1);
    CHECK(svr.configs[0].get_str("kernel") == "rbf");
}

TEST_CASE("run_experiment: 2 algorithms x 1 pset x 2 splits = 4 cells") {
    fs::path dir = fs::temp_directory_path() / "tardy_run_small";
    fs::remove_all(dir);
    auto config = small_config(dir.string());
    auto outcome = run_experiment(config);
    CHECK(outcome.report.cells.size() == 4);
    CHECK(outcome.cells_failed == 0);
    CHECK(outcome.cells_reused == 0);
    std::size_t cell_files = 0;
    for (const auto& e : fs::directory_iterator(dir / "cells")) {
        (void)e;
        ++cell_files;
    }
    CHECK(cell_files == 4);
    CHECK(fs::exists(dir / "report" / "gscores.csv"));
    fs::remove_all(dir);
}

TEST_CASE("run_experiment: resumable and byte-identical across reruns") {
    fs::path dir = fs::temp_directory_path() / "tardy_run_resume";
    fs::remove_all(dir);
    auto config = small_config(dir.string());
    auto first = run_experiment(config);
    auto gscores_first = slurp(dir / "report" / "gscores.csv");
    auto intra_first = slurp(dir / "report" / "intra_obj.csv");

    auto second = run_experiment(config);
    CHECK(second.cells_reused == 4);  // all completed cells skipped
    CHECK(slurp(dir / "report" / "gscores.csv") == gscores_first);
    CHECK(slurp(dir / "report" / "intra_obj.csv") == intra_first);

    // fresh directory, same seed: identical tables
    fs::path dir2 = fs::temp_directory_path() / "tardy_run_fresh";
    fs::remove_all(dir2);
    auto config2 = small_config(dir2.string());
    run_experiment(config2);
    CHECK(slurp(dir2 / "report" / "gscores.csv") == gscores_first);
    CHECK(slurp(dir2 / "report" / "intra_obj.csv") == intra_first);

    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("run_experiment: cell independence under algorithm subsetting") {
    fs::path both_dir = fs::temp_directory_path() / "tardy_run_both";
    fs::path solo_dir = fs::temp_directory_path() / "tardy_run_solo";
    fs::remove_all(both_dir);
    fs::remove_all(solo_dir);

    auto both = small_config(both_dir.string());
    auto outcome_both = run_experiment(both);

    auto solo = small_config(solo_dir.string());
    solo.algorithms = {"RT"};  // drop KNN
    auto outcome_solo = run_experiment(solo);

    // RT rows unchanged by KNN's presence
    for (std::size_t s = 0; s < 2; ++s) {
        const auto* a = outcome_both.report.find("RT", PredictorSet::OBJ, s);
        const auto* b = outcome_solo.report.find("RT", PredictorSet::OBJ, s);
        REQUIRE(a);
        REQUIRE(b);
        CHECK(a->test.g == b->test.g);
        CHECK(a->cv_mean_g == b->cv_mean_g);
        CHECK(a->seed == b->seed);
    }
    fs::remove_all(both_dir);
    fs::remove_all(solo_dir);
}

TEST_CASE("report subcommand path: rebuild from persisted cells") {
    fs::path dir = fs::temp_directory_path() / "tardy_run_report";
    fs::remove_all(dir);
    auto config = small_config(dir.string());
    run_experiment(config);
    fs::remove_all(dir / "report");

    auto report = report_from_cells(config);
    CHECK(report.cells.size() == 4);
    emit_tables(report, config.out_dir, config.format);
    CHECK(fs::exists(dir / "report" / "gscores.csv"));
    fs::remove_all(dir);
}

TEST_CASE("per-cell failures are recorded and the run continues") {
    fs::path dir = fs::temp_directory_path() / "tardy_run_fail";
    fs::remove_all(dir);
    auto config = small_config(dir.string());
    config.algorithms = {"KNN"};
    // k far beyond the fold size: every fit fails
    config.grid_overrides = {{"KNN", {{"num", {{"k", {1e6}}}}}}};
    auto outcome = run_experiment(config);
    CHECK(outcome.cells_failed == 2);
    for (const auto& c : outcome.report.cells) {
        CHECK(c.failed);
        CHECK(!c.error.empty());
    }
    fs::remove_all(dir);
}
