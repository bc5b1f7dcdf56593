#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tardy/data.hpp"
#include "tardy/report.hpp"
#include "tardy/tuning.hpp"

namespace tardy {

/// Full experiment description. Parsed from the JSON config file; every
/// field has a documented default except the seed, which is always
/// required (no wall-clock fallback).
struct RunConfig {
    std::optional<std::string> csv_path;   // data source: file...
    std::optional<SynthConfig> synth;      // ...or generator (default)
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> algorithms;   // defaults to all_variants()
    std::vector<PredictorSet> psets = {PredictorSet::SUBJ, PredictorSet::OBJ,
                                       PredictorSet::COMB};
    std::size_t cv_folds = 4;
    std::size_t n_splits = 10;
    double train_fraction = 0.8;
    NormalizationScope scope = NormalizationScope::ALL_ROWS;
    bool reduced_grids = false;
    nlohmann::json grid_overrides;         // per-family parameter value lists
    std::string out_dir = "out";
    std::size_t jobs = 0;                  // 0 = hardware concurrency
    TableFormat format = TableFormat::BOTH;
    bool save_models = false;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Grid for one (variant, predictor set): overrides file first, then the
/// version-pinned defaults.
HyperGrid grid_for(const RunConfig& config, const std::string& variant,
                   const std::vector<std::string>& feature_names);

/// Deterministic per-cell seed; subsetting a run never shifts the
/// randomness of the remaining cells.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t split,
                        PredictorSet pset, const std::string& variant);

struct RunOutcome {
    ExperimentReport report;
    std::size_t cells_failed = 0;
    std::size_t cells_reused = 0;  // resumed from a previous run
};

/// The whole protocol: load or synthesize, clean, normalize, split, then
/// per (split x predictor set x algorithm) tune with K-fold CV, refit on
/// the full training split, and evaluate on the held-out test rows. Cell
/// results persist under <out>/cells/ and completed cells are skipped on
/// rerun. Cell failures are recorded, not fatal.
RunOutcome run_experiment(const RunConfig& config);

/// Rebuilds the report from persisted cells (the `report` subcommand).
ExperimentReport report_from_cells(const RunConfig& config);

}  // namespace tardy
