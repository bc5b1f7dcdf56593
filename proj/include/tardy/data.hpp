#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tardy/core.hpp"

namespace tardy {

/// One assignment row after cleaning: all fields present.
/// delay is in days; positive = late, zero or negative = timely.
struct AssignmentRecord {
    std::string student_id;
    std::string course_id;
    std::string assignment_id;
    double gase = 0.0;
    double sdls = 0.0;
    double apss = 0.0;
    double aps = 0.0;
    double clicks_assignment = 0.0;
    double interval_days = 0.0;
    double clicks_activities = 0.0;
    double delay = 0.0;
};

/// One CSV row as read: numeric cells may be missing (empty cell).
struct RawRecord {
    std::string student_id;
    std::string course_id;
    std::string assignment_id;
    std::optional<double> gase, sdls, apss, aps;
    std::optional<double> clicks_assignment, interval_days, clicks_activities;
    std::optional<double> delay;
};

struct Dataset {
    std::vector<AssignmentRecord> rows;
    std::size_t n() const { return rows.size(); }
};

// Feature columns in their fixed projection order. COMB is OBJ followed by
// SUBJ; this order is load-bearing for reports and random-slope columns.
enum class Feature {
    ClicksAssignment = 0,
    IntervalDays,
    ClicksActivities,
    Gase,
    Sdls,
    Apss,
    Aps,
};
inline constexpr std::array<Feature, 3> kObjFeatures{
    Feature::ClicksAssignment, Feature::IntervalDays, Feature::ClicksActivities};
inline constexpr std::array<Feature, 4> kSubjFeatures{Feature::Gase, Feature::Sdls,
                                                      Feature::Apss, Feature::Aps};

const char* feature_name(Feature f);
double feature_value(const AssignmentRecord& r, Feature f);
double& feature_value(AssignmentRecord& r, Feature f);

enum class PredictorSet { SUBJ, OBJ, COMB };
const char* predictor_set_name(PredictorSet p);
PredictorSet predictor_set_from_name(const std::string& s);
std::vector<Feature> predictor_features(PredictorSet p);

// ---------------------------------------------------------------------------
// CSV ingest / emit
//
// Header (exact): student_id,course_id,assignment_id,gase,sdls,apss,aps,
//                 clicks_assignment,interval_days,clicks_activities,delay_days
// UTF-8, '.' decimal separator, ',' field separator, empty cell = missing.
// ---------------------------------------------------------------------------

extern const char* const kCsvHeader;

std::vector<RawRecord> load_csv(const std::string& path);
std::vector<RawRecord> load_csv(std::istream& in);
void write_csv(const Dataset& dataset, const std::string& path);
void write_csv(const Dataset& dataset, std::ostream& out);

struct CleanResult {
    Dataset dataset;
    std::size_t dropped = 0;
};

/// Keeps only complete records that satisfy the count minima
/// (clicks_assignment >= 1, clicks_activities >= 0).
CleanResult drop_missing(const std::vector<RawRecord>& records);

// ---------------------------------------------------------------------------
// Max-absolute normalization
// ---------------------------------------------------------------------------

enum class NormalizationScope { ALL_ROWS, TRAIN_ONLY };

/// Per-column max-absolute scales; an all-zero column gets scale 1 so the
/// transform is total. delay doubles as y_max for the error metric.
struct NormalizationScales {
    std::array<double, 7> feature = {1, 1, 1, 1, 1, 1, 1};  // indexed by Feature
    double delay = 1.0;

    double for_feature(Feature f) const { return feature[static_cast<std::size_t>(f)]; }
};

NormalizationScales fit_normalizer(const Dataset& dataset);
NormalizationScales fit_normalizer(const Dataset& dataset,
                                   std::span<const std::size_t> rows);
/// value' = value / scale. Values outside the fitted range are NOT clamped.
Dataset apply_normalizer(const Dataset& dataset, const NormalizationScales& scales);
Dataset invert_normalizer(const Dataset& dataset, const NormalizationScales& scales);

// ---------------------------------------------------------------------------
// Repeated randomized splits
// ---------------------------------------------------------------------------

struct SplitPlan {
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    struct Partition {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
    };
    std::vector<Partition> partitions;
};

/// n_splits seeded uniform permutations, each cut at floor(train_fraction*n).
SplitPlan make_split_plan(std::size_t n_rows, std::uint64_t seed,
                          std::size_t n_splits = 10, double train_fraction = 0.8);

struct OverlapStats {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
};

/// Statistics over pairwise test-set intersection sizes.
OverlapStats overlap_stats(const SplitPlan& plan);

// ---------------------------------------------------------------------------
// Projection to a model-ready problem
// ---------------------------------------------------------------------------

struct ProblemData {
    Matrix X;
    std::vector<double> y;
    GroupStructure groups;
    std::vector<std::string> feature_names;

    ProblemData take_rows(std::span<const std::size_t> idx) const {
        return {X.take_rows(idx), take_values(y, idx), groups.take_rows(idx),
                feature_names};
    }
};

/// Dense student/course indices in first-appearance order.
GroupStructure group_structure(const Dataset& dataset);

ProblemData project(const Dataset& dataset, PredictorSet pset);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct ColumnTarget {
    double mean = 0.0;
    double sd = 1.0;
    double min = 0.0;
    double max = 1.0;
};

/// Defaults reproduce the published variable summary the generator mimics.
struct SynthConfig {
    std::size_t n_students = 134;
    std::size_t n_courses = 126;
    std::size_t n_assignments = 1107;
    double target_timely_fraction = 0.67;

    ColumnTarget gase{19.71, 3.10, 8, 25};
    ColumnTarget sdls{38.74, 5.29, 18, 50};
    ColumnTarget apss{11.04, 4.16, 5, 21};
    ColumnTarget aps{72.51, 11.87, 43, 104};
    ColumnTarget clicks_assignment{6.58, 4.91, 1, 34};
    ColumnTarget interval_days{-7.13, 32.40, -150.30, 98.72};
    ColumnTarget clicks_activities{173.83, 168.44, 0, 1237};
    ColumnTarget delay{-1.66, 18.26, -113.51, 132.43};

    /// Coefficients of the latent delay model, applied to max-abs-normalized
    /// predictors. Objective signal intentionally dominates; interval_days
    /// carries the strongest single coefficient.
    std::array<double, 7> signal = {
        -0.45,  // clicks_assignment
        0.90,   // interval_days
        -0.25,  // clicks_activities
        -0.12,  // gase
        -0.18,  // sdls
        0.25,   // apss
        0.30,   // aps
    };

    double student_intercept_sd = 0.10;
    double course_intercept_sd = 0.08;
    /// Per-course random slopes on the assignment-level predictors
    /// (clicks_assignment, interval_days); 0 disables them.
    double course_slope_sd = 0.0;
    double noise_sd = 0.15;

    std::size_t min_courses_per_student = 1;
    std::size_t max_courses_per_student = 3;

    ColumnTarget column_target(Feature f) const;
};

Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace tardy
