#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tardy/data.hpp"
#include "tardy/metrics.hpp"

namespace tardy {

struct CellKey {
    std::string algorithm;
    PredictorSet pset = PredictorSet::SUBJ;
    std::size_t split = 0;

    std::string id() const;  // file-name friendly
};

/// One (algorithm, predictor set, split) result: CV summary on the training
/// side, full metric report on the test side.
struct CellResult {
    CellKey key;
    bool failed = false;
    std::string error;
    double cv_mean_g = 0.0;
    double cv_sd_g = 0.0;
    nlohmann::json best_config;
    MetricReport test;
    std::vector<double> importance;  // normalized; empty when not applicable
    std::uint64_t seed = 0;
    double duration_s = 0.0;

    nlohmann::json to_json() const;
    static CellResult from_json(const nlohmann::json& j);
};

struct ExperimentReport {
    std::vector<std::string> algorithms;   // table row order
    std::vector<PredictorSet> psets;       // table column order
    std::size_t n_splits = 0;
    double delay_scale = 1.0;              // for de-normalizing MAE to days
    std::vector<CellResult> cells;
    nlohmann::json meta;

    const CellResult* find(const std::string& algorithm, PredictorSet pset,
                           std::size_t split) const;
    /// Per-metric values over the splits of one (algorithm, pset) cell group.
    std::vector<double> collect(const std::string& algorithm, PredictorSet pset,
                                double MetricReport::* metric) const;
    std::vector<double> collect_cv_g(const std::string& algorithm,
                                     PredictorSet pset) const;
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n-1)
};

Aggregate aggregate(std::span<const double> values);

enum class TableFormat { CSV, MARKDOWN, BOTH };

/// Writes the G-score comparison, the three intra-model tables, the
/// inter-model winners, the importance table and run metadata under
/// <out_dir>/report/. Pure function of the report: re-emission is
/// byte-identical. Throws with the full list of missing cells when the
/// report is incomplete.
void emit_tables(const ExperimentReport& report, const std::string& out_dir,
                 TableFormat format = TableFormat::BOTH);

struct GapRow {
    std::string algorithm;
    PredictorSet pset = PredictorSet::SUBJ;
    double gap = 0.0;  // cv mean G - test mean G
};

/// Signed CV-vs-test gap per cell group, sorted ascending (most stable
/// first).
std::vector<GapRow> cv_test_gap(const ExperimentReport& report);

}  // namespace tardy
