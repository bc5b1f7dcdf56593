#include "tardy/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "tardy/rng.hpp"

namespace tardy {

const char* feature_name(Feature f) {
    switch (f) {
        case Feature::ClicksAssignment: return "clicks_assignment";
        case Feature::IntervalDays: return "interval_days";
        case Feature::ClicksActivities: return "clicks_activities";
        case Feature::Gase: return "gase";
        case Feature::Sdls: return "sdls";
        case Feature::Apss: return "apss";
        case Feature::Aps: return "aps";
    }
    throw Error("unknown feature");
}

double feature_value(const AssignmentRecord& r, Feature f) {
    switch (f) {
        case Feature::ClicksAssignment: return r.clicks_assignment;
        case Feature::IntervalDays: return r.interval_days;
        case Feature::ClicksActivities: return r.clicks_activities;
        case Feature::Gase: return r.gase;
        case Feature::Sdls: return r.sdls;
        case Feature::Apss: return r.apss;
        case Feature::Aps: return r.aps;
    }
    throw Error("unknown feature");
}

double& feature_value(AssignmentRecord& r, Feature f) {
    switch (f) {
        case Feature::ClicksAssignment: return r.clicks_assignment;
        case Feature::IntervalDays: return r.interval_days;
        case Feature::ClicksActivities: return r.clicks_activities;
        case Feature::Gase: return r.gase;
        case Feature::Sdls: return r.sdls;
        case Feature::Apss: return r.apss;
        case Feature::Aps: return r.aps;
    }
    throw Error("unknown feature");
}

const char* predictor_set_name(PredictorSet p) {
    switch (p) {
        case PredictorSet::SUBJ: return "subj";
        case PredictorSet::OBJ: return "obj";
        case PredictorSet::COMB: return "comb";
    }
    throw Error("unknown predictor set");
}

PredictorSet predictor_set_from_name(const std::string& s) {
    if (s == "subj") return PredictorSet::SUBJ;
    if (s == "obj") return PredictorSet::OBJ;
    if (s == "comb") return PredictorSet::COMB;
    throw ConfigError("unknown predictor set: " + s);
}

std::vector<Feature> predictor_features(PredictorSet p) {
    std::vector<Feature> out;
    if (p == PredictorSet::OBJ || p == PredictorSet::COMB)
        out.insert(out.end(), kObjFeatures.begin(), kObjFeatures.end());
    if (p == PredictorSet::SUBJ || p == PredictorSet::COMB)
        out.insert(out.end(), kSubjFeatures.begin(), kSubjFeatures.end());
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

const char* const kCsvHeader =
    "student_id,course_id,assignment_id,gase,sdls,apss,aps,"
    "clicks_assignment,interval_days,clicks_activities,delay_days";

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

const std::array<const char*, 11> kColumns = {
    "student_id",        "course_id",     "assignment_id",      "gase",
    "sdls",              "apss",          "aps",                "clicks_assignment",
    "interval_days",     "clicks_activities", "delay_days"};

std::optional<double> parse_cell(const std::string& cell, std::size_t row,
                                 const char* column) {
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("unparsable cell at row " + std::to_string(row) +
                         ", column " + column + ": '" + cell + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

std::vector<RawRecord> load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty file: missing header");
    auto header = split_fields(line);
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (i >= header.size())
            throw SchemaError(std::string("missing column: ") + kColumns[i]);
        if (header[i] != kColumns[i])
            throw SchemaError("unexpected column '" + header[i] + "' where '" +
                              kColumns[i] + "' was expected");
    }
    if (header.size() > kColumns.size())
        throw SchemaError("extra column: " + header[kColumns.size()]);

    std::vector<RawRecord> out;
    std::size_t row = 1;  // 1-based data rows, header excluded
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            ++row;
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != kColumns.size())
            throw ParseError("row " + std::to_string(row) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(kColumns.size()));
        RawRecord r;
        r.student_id = fields[0];
        r.course_id = fields[1];
        r.assignment_id = fields[2];
        r.gase = parse_cell(fields[3], row, "gase");
        r.sdls = parse_cell(fields[4], row, "sdls");
        r.apss = parse_cell(fields[5], row, "apss");
        r.aps = parse_cell(fields[6], row, "aps");
        r.clicks_assignment = parse_cell(fields[7], row, "clicks_assignment");
        r.interval_days = parse_cell(fields[8], row, "interval_days");
        r.clicks_activities = parse_cell(fields[9], row, "clicks_activities");
        r.delay = parse_cell(fields[10], row, "delay_days");
        out.push_back(std::move(r));
        ++row;
    }
    return out;
}

std::vector<RawRecord> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    return load_csv(in);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : dataset.rows) {
        out << r.student_id << ',' << r.course_id << ',' << r.assignment_id << ','
            << format_double(r.gase) << ',' << format_double(r.sdls) << ','
            << format_double(r.apss) << ',' << format_double(r.aps) << ','
            << format_double(r.clicks_assignment) << ','
            << format_double(r.interval_days) << ','
            << format_double(r.clicks_activities) << ',' << format_double(r.delay)
            << '\n';
    }
}

void write_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_csv(dataset, out);
}

CleanResult drop_missing(const std::vector<RawRecord>& records) {
    CleanResult result;
    for (const auto& r : records) {
        bool complete = !r.student_id.empty() && !r.course_id.empty() &&
                        !r.assignment_id.empty() && r.gase && r.sdls && r.apss &&
                        r.aps && r.clicks_assignment && r.interval_days &&
                        r.clicks_activities && r.delay;
        // count minima from the variable schema
        if (complete && (*r.clicks_assignment < 1.0 || *r.clicks_activities < 0.0))
            complete = false;
        if (!complete) {
            ++result.dropped;
            continue;
        }
        AssignmentRecord rec;
        rec.student_id = r.student_id;
        rec.course_id = r.course_id;
        rec.assignment_id = r.assignment_id;
        rec.gase = *r.gase;
        rec.sdls = *r.sdls;
        rec.apss = *r.apss;
        rec.aps = *r.aps;
        rec.clicks_assignment = *r.clicks_assignment;
        rec.interval_days = *r.interval_days;
        rec.clicks_activities = *r.clicks_activities;
        rec.delay = *r.delay;
        result.dataset.rows.push_back(std::move(rec));
    }
    if (result.dataset.rows.empty())
        throw Error("empty dataset: all " + std::to_string(result.dropped) +
                    " rows incomplete");
    return result;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

NormalizationScales fit_scales(const Dataset& dataset,
                               std::span<const std::size_t> rows) {
    if (rows.empty()) throw Error("fit_normalizer: empty dataset");
    NormalizationScales s;
    for (Feature f : predictor_features(PredictorSet::COMB)) {
        double max_abs = 0.0;
        for (std::size_t i : rows)
            max_abs = std::max(max_abs, std::abs(feature_value(dataset.rows[i], f)));
        s.feature[static_cast<std::size_t>(f)] = max_abs > 0.0 ? max_abs : 1.0;
    }
    double max_abs = 0.0;
    for (std::size_t i : rows) max_abs = std::max(max_abs, std::abs(dataset.rows[i].delay));
    s.delay = max_abs > 0.0 ? max_abs : 1.0;
    return s;
}

}  // namespace

NormalizationScales fit_normalizer(const Dataset& dataset) {
    std::vector<std::size_t> all(dataset.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return fit_scales(dataset, all);
}

NormalizationScales fit_normalizer(const Dataset& dataset,
                                   std::span<const std::size_t> rows) {
    return fit_scales(dataset, rows);
}

Dataset apply_normalizer(const Dataset& dataset, const NormalizationScales& scales) {
    Dataset out = dataset;
    for (auto& r : out.rows) {
        for (Feature f : predictor_features(PredictorSet::COMB))
            feature_value(r, f) /= scales.for_feature(f);
        r.delay /= scales.delay;
    }
    return out;
}

Dataset invert_normalizer(const Dataset& dataset, const NormalizationScales& scales) {
    Dataset out = dataset;
    for (auto& r : out.rows) {
        for (Feature f : predictor_features(PredictorSet::COMB))
            feature_value(r, f) *= scales.for_feature(f);
        r.delay *= scales.delay;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

SplitPlan make_split_plan(std::size_t n_rows, std::uint64_t seed,
                          std::size_t n_splits, double train_fraction) {
    if (n_rows < 10) throw Error("make_split_plan: need at least 10 rows");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ConfigError("train_fraction must be in (0, 1)");
    SplitPlan plan;
    plan.seed = seed;
    plan.train_fraction = train_fraction;
    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n_rows)));
    for (std::size_t s = 0; s < n_splits; ++s) {
        Rng rng(derive_seed(seed, "split", s));
        auto perm = rng.permutation(n_rows);
        SplitPlan::Partition part;
        part.train.assign(perm.begin(), perm.begin() + static_cast<long>(n_train));
        part.test.assign(perm.begin() + static_cast<long>(n_train), perm.end());
        std::sort(part.train.begin(), part.train.end());
        std::sort(part.test.begin(), part.test.end());
        plan.partitions.push_back(std::move(part));
    }
    return plan;
}

OverlapStats overlap_stats(const SplitPlan& plan) {
    if (plan.partitions.size() < 2)
        throw Error("overlap_stats: need at least 2 partitions");
    std::vector<std::size_t> sizes;
    for (std::size_t a = 0; a < plan.partitions.size(); ++a) {
        for (std::size_t b = a + 1; b < plan.partitions.size(); ++b) {
            const auto& ta = plan.partitions[a].test;  // sorted
            const auto& tb = plan.partitions[b].test;
            std::vector<std::size_t> inter;
            std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                                  std::back_inserter(inter));
            sizes.push_back(inter.size());
        }
    }
    OverlapStats st;
    st.min = *std::min_element(sizes.begin(), sizes.end());
    st.max = *std::max_element(sizes.begin(), sizes.end());
    double mean = 0.0;
    for (auto v : sizes) mean += static_cast<double>(v);
    mean /= static_cast<double>(sizes.size());
    st.mean = mean;
    double ss = 0.0;
    for (auto v : sizes) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
    st.sd = sizes.size() > 1 ? std::sqrt(ss / static_cast<double>(sizes.size() - 1)) : 0.0;
    return st;
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

GroupStructure group_structure(const Dataset& dataset) {
    GroupStructure g;
    std::unordered_map<std::string, int> students, courses;
    for (const auto& r : dataset.rows) {
        auto [si, s_new] = students.try_emplace(r.student_id,
                                                static_cast<int>(students.size()));
        auto [ci, c_new] = courses.try_emplace(r.course_id,
                                               static_cast<int>(courses.size()));
        g.student.push_back(si->second);
        g.course.push_back(ci->second);
    }
    return g;
}

ProblemData project(const Dataset& dataset, PredictorSet pset) {
    auto feats = predictor_features(pset);
    ProblemData p;
    p.X = Matrix(dataset.n(), feats.size());
    p.y.reserve(dataset.n());
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        for (std::size_t j = 0; j < feats.size(); ++j)
            p.X.at(i, j) = feature_value(dataset.rows[i], feats[j]);
        p.y.push_back(dataset.rows[i].delay);
    }
    p.groups = group_structure(dataset);
    for (Feature f : feats) p.feature_names.emplace_back(feature_name(f));
    return p;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

ColumnTarget SynthConfig::column_target(Feature f) const {
    switch (f) {
        case Feature::ClicksAssignment: return clicks_assignment;
        case Feature::IntervalDays: return interval_days;
        case Feature::ClicksActivities: return clicks_activities;
        case Feature::Gase: return gase;
        case Feature::Sdls: return sdls;
        case Feature::Apss: return apss;
        case Feature::Aps: return aps;
    }
    throw Error("unknown feature");
}

namespace {

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Mean of a normal(mu, sigma) truncated to [lo, hi]; increasing in mu.
double truncated_mean(double mu, double sigma, double lo, double hi) {
    double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
    double z = normal_cdf(b) - normal_cdf(a);
    if (z < 1e-300) return mu < lo ? lo : hi;  // fully outside the window
    return mu + sigma * (normal_pdf(a) - normal_pdf(b)) / z;
}

/// mu such that the [lo, hi]-truncated normal(mu, sigma) has the target mean.
double solve_truncated_mu(double target, double sigma, double lo, double hi) {
    double lo_mu = lo - 10.0 * sigma, hi_mu = hi + 10.0 * sigma;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo_mu + hi_mu);
        if (truncated_mean(mid, sigma, lo, hi) < target)
            lo_mu = mid;
        else
            hi_mu = mid;
    }
    return 0.5 * (lo_mu + hi_mu);
}

double draw_truncated(Rng& rng, double mu, double sigma, double lo, double hi) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        double v = rng.normal(mu, sigma);
        if (v >= lo && v <= hi) return v;
    }
    return std::clamp(mu, lo, hi);  // pathologically narrow window
}

/// Shifts entity values so the row-weighted sample mean hits the target,
/// re-clamping (and re-rounding for integer columns) after each shift.
void calibrate_mean(std::vector<double>& values, const std::vector<double>& weights,
                    const ColumnTarget& t, bool integer) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    for (int pass = 0; pass < 8; ++pass) {
        double mean = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
        mean /= wsum;
        double delta = t.mean - mean;
        if (std::abs(delta) < 1e-3 * std::max(1.0, std::abs(t.mean))) break;
        for (auto& v : values) {
            v = std::clamp(v + delta, t.min, t.max);
            if (integer) v = std::round(v);
        }
    }
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.target_timely_fraction <= 0.0 || cfg.target_timely_fraction >= 1.0)
        throw ConfigError("target_timely_fraction must be in (0, 1)");
    if (cfg.n_students == 0 || cfg.n_courses == 0 || cfg.n_assignments == 0)
        throw ConfigError("n_students, n_courses, n_assignments must be positive");
    if (cfg.min_courses_per_student < 1 ||
        cfg.min_courses_per_student > cfg.max_courses_per_student)
        throw ConfigError("invalid courses-per-student range");
    for (Feature f : predictor_features(PredictorSet::COMB)) {
        auto t = cfg.column_target(f);
        if (!(t.min < t.max)) throw ConfigError(std::string("column target min must be < max: ") + feature_name(f));
    }
    if (!(cfg.delay.min < cfg.delay.max)) throw ConfigError("delay target min must be < max");

    const std::size_t n = cfg.n_assignments;
    Rng rng(derive_seed(seed, "synth"));
    // enrollment: each student takes a seeded handful of courses
    std::vector<std::vector<std::size_t>> enrolled(cfg.n_students);
    for (std::size_t s = 0; s < cfg.n_students; ++s) {
        std::size_t span = cfg.max_courses_per_student - cfg.min_courses_per_student + 1;
        std::size_t k = cfg.min_courses_per_student + rng.index(span);
        k = std::min(k, cfg.n_courses);
        enrolled[s] = rng.sample_without_replacement(cfg.n_courses, k);
    }

    // row -> (student, course): students round-robin, course seeded per row
    std::vector<std::size_t> row_student(n), row_course(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = i % cfg.n_students;
        row_student[i] = s;
        row_course[i] = enrolled[s][rng.index(enrolled[s].size())];
    }

    // subjective scores: one draw per student, repeated on every row
    std::vector<double> rows_per_student(cfg.n_students, 0.0);
    for (std::size_t i = 0; i < n; ++i) rows_per_student[row_student[i]] += 1.0;
    std::array<std::vector<double>, 4> subj;
    for (std::size_t q = 0; q < kSubjFeatures.size(); ++q) {
        auto t = cfg.column_target(kSubjFeatures[q]);
        double mu = solve_truncated_mu(t.mean, t.sd, t.min, t.max);
        subj[q].resize(cfg.n_students);
        for (std::size_t s = 0; s < cfg.n_students; ++s)
            subj[q][s] = std::round(draw_truncated(rng, mu, t.sd, t.min, t.max));
        calibrate_mean(subj[q], rows_per_student, t, /*integer=*/true);
    }

    // course activity clicks: one draw per (student, course) enrollment
    std::vector<double> act_by_cell;
    std::unordered_map<std::uint64_t, std::size_t> cell_index;
    std::vector<double> cell_weight;
    {
        auto t = cfg.clicks_activities;
        double mu = solve_truncated_mu(t.mean, t.sd, t.min, t.max);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t key = (static_cast<std::uint64_t>(row_student[i]) << 32) |
                                static_cast<std::uint64_t>(row_course[i]);
            if (cell_index.try_emplace(key, act_by_cell.size()).second) {
                act_by_cell.push_back(std::round(draw_truncated(rng, mu, t.sd, t.min, t.max)));
                cell_weight.push_back(0.0);
            }
            cell_weight[cell_index[key]] += 1.0;
        }
        calibrate_mean(act_by_cell, cell_weight, t, /*integer=*/true);
    }

    // assignment-level objective features: one draw per row
    std::vector<double> clicks(n), interval(n);
    {
        auto t = cfg.clicks_assignment;
        double mu = solve_truncated_mu(t.mean, t.sd, t.min, t.max);
        for (auto& v : clicks) v = std::round(draw_truncated(rng, mu, t.sd, t.min, t.max));
        std::vector<double> w(n, 1.0);
        calibrate_mean(clicks, w, t, /*integer=*/true);
    }
    {
        auto t = cfg.interval_days;
        double mu = solve_truncated_mu(t.mean, t.sd, t.min, t.max);
        for (auto& v : interval) v = draw_truncated(rng, mu, t.sd, t.min, t.max);
        std::vector<double> w(n, 1.0);
        calibrate_mean(interval, w, t, /*integer=*/false);
    }

    // group effects
    std::vector<double> u_student(cfg.n_students), v_course(cfg.n_courses);
    std::vector<double> slope_clicks(cfg.n_courses, 0.0), slope_interval(cfg.n_courses, 0.0);
    for (auto& u : u_student) u = rng.normal(0.0, cfg.student_intercept_sd);
    for (auto& v : v_course) v = rng.normal(0.0, cfg.course_intercept_sd);
    if (cfg.course_slope_sd > 0.0) {
        for (auto& w : slope_clicks) w = rng.normal(0.0, cfg.course_slope_sd);
        for (auto& w : slope_interval) w = rng.normal(0.0, cfg.course_slope_sd);
    }

    auto max_abs = [](const ColumnTarget& t) {
        return std::max(std::abs(t.min), std::abs(t.max));
    };
    const double s_clicks = max_abs(cfg.clicks_assignment);
    const double s_interval = max_abs(cfg.interval_days);
    const double s_act = max_abs(cfg.clicks_activities);
    const std::array<double, 4> s_subj = {max_abs(cfg.gase), max_abs(cfg.sdls),
                                          max_abs(cfg.apss), max_abs(cfg.aps)};

    // latent delay score per row
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = row_student[i], c = row_course[i];
        std::uint64_t key = (static_cast<std::uint64_t>(s) << 32) |
                            static_cast<std::uint64_t>(c);
        double act = act_by_cell[cell_index[key]];
        double x_ca = clicks[i] / s_clicks;
        double x_in = interval[i] / s_interval;
        double x_ac = act / s_act;
        double v = cfg.signal[0] * x_ca + cfg.signal[1] * x_in + cfg.signal[2] * x_ac;
        for (std::size_t q = 0; q < 4; ++q)
            v += cfg.signal[3 + q] * (subj[q][s] / s_subj[q]);
        v += u_student[s] + v_course[c];
        v += slope_clicks[c] * x_ca + slope_interval[c] * x_in;
        v += rng.normal(0.0, cfg.noise_sd);
        z[i] = v;
    }

    // intercept calibration: shift so the target fraction lands at zero,
    // then scale the centered score to the target delay spread
    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    auto k = static_cast<std::size_t>(
        std::round(cfg.target_timely_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    double q = sorted[k - 1];

    double mz = vec_mean(z);
    double var = 0.0;
    for (double v : z) var += (v - mz) * (v - mz);
    var /= static_cast<double>(n);
    if (var <= 0.0)
        throw Error("synthetic calibration failed: latent score is constant");
    double scale = cfg.delay.sd / std::sqrt(var);

    std::vector<double> delay(n);
    std::size_t timely = 0;
    for (std::size_t i = 0; i < n; ++i) {
        delay[i] = std::clamp(scale * (z[i] - q), cfg.delay.min, cfg.delay.max);
        if (delay[i] <= 0.0) ++timely;
    }
    double achieved = static_cast<double>(timely) / static_cast<double>(n);
    if (n >= 1000 && std::abs(achieved - cfg.target_timely_fraction) > 0.03)
        throw Error("synthetic calibration failed: timely fraction " +
                    std::to_string(achieved) + " vs target " +
                    std::to_string(cfg.target_timely_fraction));

    Dataset out;
    out.rows.reserve(n);
    char idbuf[32];
    for (std::size_t i = 0; i < n; ++i) {
        AssignmentRecord r;
        std::snprintf(idbuf, sizeof(idbuf), "S%04zu", row_student[i]);
        r.student_id = idbuf;
        std::snprintf(idbuf, sizeof(idbuf), "C%04zu", row_course[i]);
        r.course_id = idbuf;
        std::snprintf(idbuf, sizeof(idbuf), "A%06zu", i);
        r.assignment_id = idbuf;
        r.gase = subj[0][row_student[i]];
        r.sdls = subj[1][row_student[i]];
        r.apss = subj[2][row_student[i]];
        r.aps = subj[3][row_student[i]];
        r.clicks_assignment = clicks[i];
        r.interval_days = interval[i];
        std::uint64_t key = (static_cast<std::uint64_t>(row_student[i]) << 32) |
                            static_cast<std::uint64_t>(row_course[i]);
        r.clicks_activities = act_by_cell[cell_index[key]];
        r.delay = delay[i];
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace tardy
