#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "tardy/data.hpp"
#include "tardy/rng.hpp"

using namespace tardy;

namespace {

std::string csv_header() { return std::string(kCsvHeader) + "\n"; }

std::string well_formed_rows(int n) {
    std::string s;
    for (int i = 0; i < n; ++i)
        s += "S1,C1,A" + std::to_string(i) + ",20,39,11,72,6,-7.1,170,1.5\n";
    return s;
}

}  // namespace

TEST_CASE("load_csv well-formed") {
    std::istringstream in(csv_header() + well_formed_rows(3));
    auto records = load_csv(in);
    REQUIRE(records.size() == 3);
    CHECK(records[0].assignment_id == "A0");
    CHECK(records[2].assignment_id == "A2");  // row order preserved
    CHECK(*records[0].delay == 1.5);
}

TEST_CASE("load_csv schema errors name the column") {
    // missing delay_days
    std::istringstream missing(
        "student_id,course_id,assignment_id,gase,sdls,apss,aps,"
        "clicks_assignment,interval_days,clicks_activities\n");
    CHECK_THROWS_WITH_AS(load_csv(missing),
                         doctest::Contains("delay_days"), SchemaError);

    std::istringstream extra(csv_header().substr(0, csv_header().size() - 1) +
                             ",bonus\n");
    CHECK_THROWS_WITH_AS(load_csv(extra), doctest::Contains("bonus"), SchemaError);

    std::istringstream swapped(
        "course_id,student_id,assignment_id,gase,sdls,apss,aps,"
        "clicks_assignment,interval_days,clicks_activities,delay_days\n");
    CHECK_THROWS_AS(load_csv(swapped), SchemaError);
}

TEST_CASE("load_csv cell errors carry row and column") {
    std::istringstream bad(csv_header() + "S1,C1,A1,20,39,11,72,6,-7.1,170,1.5\n" +
                           "S1,C1,A2,xx,39,11,72,6,-7.1,170,1.5\n");
    CHECK_THROWS_WITH_AS(load_csv(bad), doctest::Contains("row 2"), ParseError);
    std::istringstream bad2(csv_header() + "S1,C1,A2,20,39,11,72,6,-7.1,170,oops\n");
    CHECK_THROWS_WITH_AS(load_csv(bad2), doctest::Contains("delay_days"), ParseError);
}

TEST_CASE("empty cell means missing, drop_missing cleans") {
    std::istringstream in(csv_header() +
                          "S1,C1,A1,20,39,11,72,6,-7.1,170,1.5\n"
                          "S1,C1,A2,,39,11,72,6,-7.1,170,1.5\n"
                          "S1,C1,A3,20,39,11,72,6,-7.1,170,-2.0\n"
                          "S1,C1,A4,20,39,11,72,6,-7.1,170,0.25\n"
                          "S1,C1,A5,20,39,11,72,6,-7.1,,0.25\n");
    auto records = load_csv(in);
    REQUIRE(records.size() == 5);
    CHECK(!records[1].gase.has_value());

    auto clean = drop_missing(records);
    CHECK(clean.dataset.n() == 3);
    CHECK(clean.dropped == 2);

    // identity when nothing is missing
    auto identical = drop_missing(
        std::vector<RawRecord>(records.begin(), records.begin() + 1));
    CHECK(identical.dropped == 0);
    CHECK(identical.dataset.n() == 1);
}

TEST_CASE("drop_missing: all incomplete is an error") {
    std::istringstream in(csv_header() + "S1,C1,A1,,39,11,72,6,-7.1,170,1.5\n");
    auto records = load_csv(in);
    CHECK_THROWS_AS(drop_missing(records), Error);
}

TEST_CASE("drop_missing enforces the count minima") {
    std::istringstream in(csv_header() +
                          "S1,C1,A1,20,39,11,72,0,-7.1,170,1.5\n"   // clicks < 1
                          "S1,C1,A2,20,39,11,72,3,-7.1,-4,1.5\n"    // activities < 0
                          "S1,C1,A3,20,39,11,72,1,-7.1,0,1.5\n");   // boundary ok
    auto clean = drop_missing(load_csv(in));
    CHECK(clean.dataset.n() == 1);
    CHECK(clean.dropped == 2);
}

TEST_CASE("csv round-trip is lossless") {
    auto dataset = generate_synthetic(SynthConfig{}, 11);
    std::ostringstream out;
    write_csv(dataset, out);
    std::istringstream in(out.str());
    auto clean = drop_missing(load_csv(in));
    REQUIRE(clean.dataset.n() == dataset.n());
    CHECK(clean.dropped == 0);
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        CHECK(clean.dataset.rows[i].delay == dataset.rows[i].delay);
        CHECK(clean.dataset.rows[i].interval_days == dataset.rows[i].interval_days);
        CHECK(clean.dataset.rows[i].student_id == dataset.rows[i].student_id);
    }
}

TEST_CASE("fit_normalizer: published interval range") {
    Dataset d;
    AssignmentRecord base{"S1", "C1", "A1", 20, 39, 11, 72, 6, 0, 170, 1.0};
    for (double v : {-150.30, 98.72, 3.0}) {
        auto r = base;
        r.interval_days = v;
        d.rows.push_back(r);
    }
    auto scales = fit_normalizer(d);
    CHECK(scales.for_feature(Feature::IntervalDays) == doctest::Approx(150.30));
    auto norm = apply_normalizer(d, scales);
    CHECK(norm.rows[0].interval_days == doctest::Approx(-1.0));
    CHECK(norm.rows[1].interval_days == doctest::Approx(0.6568).epsilon(1e-3));
}

TEST_CASE("fit_normalizer: degenerate columns") {
    Dataset d;
    AssignmentRecord r{"S1", "C1", "A1", 0, 0, 0, 0, 34, 0, 0, 0};
    d.rows.push_back(r);
    auto scales = fit_normalizer(d);
    CHECK(scales.for_feature(Feature::Gase) == 1.0);          // all-zero column
    CHECK(scales.for_feature(Feature::ClicksAssignment) == 34.0);  // single value
    CHECK(scales.delay == 1.0);
    auto norm = apply_normalizer(d, scales);
    CHECK(norm.rows[0].gase == 0.0);
    CHECK(norm.rows[0].clicks_assignment == 1.0);
}

TEST_CASE("apply_normalizer: delay scale and no clamping") {
    Dataset d;
    AssignmentRecord a{"S1", "C1", "A1", 1, 1, 1, 1, 1, -150.30, 1, 132.43};
    AssignmentRecord b{"S1", "C1", "A2", 1, 1, 1, 1, 1, 10.0, 1, -3.0};
    d.rows = {a, b};
    std::vector<std::size_t> train{1};
    auto scales = fit_normalizer(d, train);  // train-only scope
    CHECK(scales.for_feature(Feature::IntervalDays) == 10.0);
    auto norm = apply_normalizer(d, scales);
    // out-of-range value is NOT clamped
    CHECK(norm.rows[0].interval_days == doctest::Approx(-15.03));
    CHECK(norm.rows[0].delay == doctest::Approx(132.43 / 3.0));

    auto all_scales = fit_normalizer(d);
    auto norm_all = apply_normalizer(d, all_scales);
    CHECK(norm_all.rows[0].delay == doctest::Approx(1.0));  // max / itself
    CHECK(norm_all.rows[1].delay == doctest::Approx(-3.0 / 132.43));
}

TEST_CASE("normalization round-trip") {
    auto dataset = generate_synthetic(SynthConfig{}, 3);
    auto scales = fit_normalizer(dataset);
    auto restored = invert_normalizer(apply_normalizer(dataset, scales), scales);
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        for (Feature f : predictor_features(PredictorSet::COMB)) {
            double orig = feature_value(dataset.rows[i], f);
            double back = feature_value(restored.rows[i], f);
            CHECK(back == doctest::Approx(orig).epsilon(1e-12));
        }
        CHECK(restored.rows[i].delay ==
              doctest::Approx(dataset.rows[i].delay).epsilon(1e-12));
    }
}

TEST_CASE("make_split_plan sizes and partition property") {
    auto plan = make_split_plan(1107, 42);
    REQUIRE(plan.partitions.size() == 10);
    for (const auto& p : plan.partitions) {
        CHECK(p.train.size() == 885);
        CHECK(p.test.size() == 222);
        std::set<std::size_t> all(p.train.begin(), p.train.end());
        all.insert(p.test.begin(), p.test.end());
        CHECK(all.size() == 1107);  // disjoint exact cover
        CHECK(*all.rbegin() == 1106);
    }
    // pairwise distinct
    for (std::size_t a = 0; a < 10; ++a)
        for (std::size_t b = a + 1; b < 10; ++b)
            CHECK(plan.partitions[a].test != plan.partitions[b].test);

    auto tiny = make_split_plan(10, 1);
    CHECK(tiny.partitions[0].train.size() == 8);
    CHECK(tiny.partitions[0].test.size() == 2);

    CHECK_THROWS_AS(make_split_plan(9, 1), Error);
}

TEST_CASE("make_split_plan determinism") {
    auto a = make_split_plan(500, 7);
    auto b = make_split_plan(500, 7);
    for (std::size_t s = 0; s < 10; ++s) {
        CHECK(a.partitions[s].train == b.partitions[s].train);
        CHECK(a.partitions[s].test == b.partitions[s].test);
    }
    auto c = make_split_plan(500, 8);
    CHECK(a.partitions[0].test != c.partitions[0].test);
}

TEST_CASE("overlap_stats") {
    // identical partitions overlap fully
    SplitPlan plan;
    SplitPlan::Partition p;
    for (std::size_t i = 0; i < 885; ++i) p.train.push_back(i);
    for (std::size_t i = 885; i < 1107; ++i) p.test.push_back(i);
    plan.partitions = {p, p};
    auto st = overlap_stats(plan);
    CHECK(st.mean == 222.0);
    CHECK(st.min == 222);
    CHECK(st.max == 222);

    // disjoint test sets
    SplitPlan::Partition q = p;
    q.test.clear();
    for (std::size_t i = 0; i < 222; ++i) q.test.push_back(i);
    plan.partitions = {p, q};
    CHECK(overlap_stats(plan).min == 0);

    SplitPlan single;
    single.partitions = {p};
    CHECK_THROWS_AS(overlap_stats(single), Error);
}

TEST_CASE("overlap_stats: expected mean near 222^2/1107 over seeds") {
    // E[overlap] = 222 * (222/1107) = 44.53 for independent uniform splits
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto st = overlap_stats(make_split_plan(1107, seed));
        total += st.mean;
        ++count;
    }
    CHECK(total / count == doctest::Approx(44.6).epsilon(0.07));
}

TEST_CASE("project shapes and fixed order") {
    auto dataset = generate_synthetic(SynthConfig{}, 5);
    auto norm = apply_normalizer(dataset, fit_normalizer(dataset));
    auto subj = project(norm, PredictorSet::SUBJ);
    auto obj = project(norm, PredictorSet::OBJ);
    auto comb = project(norm, PredictorSet::COMB);
    CHECK(subj.X.cols == 4);
    CHECK(obj.X.cols == 3);
    CHECK(comb.X.cols == 7);
    CHECK(comb.feature_names[0] == "clicks_assignment");
    CHECK(comb.feature_names[1] == "interval_days");
    CHECK(comb.feature_names[2] == "clicks_activities");
    CHECK(comb.feature_names[3] == "gase");
    CHECK(comb.feature_names[6] == "aps");
    // COMB = OBJ columns then SUBJ columns
    for (std::size_t i = 0; i < norm.n(); ++i) {
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(comb.X.at(i, j) == obj.X.at(i, j));
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(comb.X.at(i, 3 + j) == subj.X.at(i, j));
        CHECK(comb.y[i] == norm.rows[i].delay);
    }
    // dense group ids
    int max_student = 0;
    for (int s : comb.groups.student) max_student = std::max(max_student, s);
    std::set<int> distinct(comb.groups.student.begin(), comb.groups.student.end());
    CHECK(static_cast<int>(distinct.size()) == max_student + 1);
}

TEST_CASE("generate_synthetic: balance and determinism") {
    SynthConfig cfg;
    auto d1 = generate_synthetic(cfg, 7);
    auto d2 = generate_synthetic(cfg, 7);
    REQUIRE(d1.n() == 1107);
    for (std::size_t i = 0; i < d1.n(); ++i)
        CHECK(d1.rows[i].delay == d2.rows[i].delay);  // deterministic per seed

    std::size_t timely = 0;
    for (const auto& r : d1.rows)
        if (r.delay <= 0.0) ++timely;
    double frac = static_cast<double>(timely) / static_cast<double>(d1.n());
    CHECK(frac >= 0.64);
    CHECK(frac <= 0.70);
}

TEST_CASE("generate_synthetic: balance within 0.03 over 10 seeds") {
    SynthConfig cfg;
    cfg.n_assignments = 1200;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        auto d = generate_synthetic(cfg, seed);
        std::size_t timely = 0;
        for (const auto& r : d.rows)
            if (r.delay <= 0.0) ++timely;
        double frac = static_cast<double>(timely) / static_cast<double>(d.n());
        CHECK(std::abs(frac - cfg.target_timely_fraction) <= 0.03);
    }
}

TEST_CASE("generate_synthetic: no-signal case still calibrates") {
    SynthConfig cfg;
    cfg.signal = {0, 0, 0, 0, 0, 0, 0};
    auto d = generate_synthetic(cfg, 3);
    std::size_t timely = 0;
    for (const auto& r : d.rows)
        if (r.delay <= 0.0) ++timely;
    double frac = static_cast<double>(timely) / static_cast<double>(d.n());
    CHECK(std::abs(frac - 0.67) <= 0.03);
}

TEST_CASE("generate_synthetic: column means near targets at n=5000") {
    SynthConfig cfg;
    cfg.n_assignments = 5000;
    auto d = generate_synthetic(cfg, 21);
    for (Feature f : predictor_features(PredictorSet::COMB)) {
        double mean = 0.0;
        for (const auto& r : d.rows) mean += feature_value(r, f);
        mean /= static_cast<double>(d.n());
        auto t = cfg.column_target(f);
        INFO(feature_name(f), " mean ", mean, " target ", t.mean);
        CHECK(std::abs(mean - t.mean) <= 0.05 * std::abs(t.mean));
        // bounds respected
        for (const auto& r : d.rows) {
            CHECK(feature_value(r, f) >= t.min);
            CHECK(feature_value(r, f) <= t.max);
        }
    }
}

TEST_CASE("generate_synthetic: config validation") {
    SynthConfig bad;
    bad.target_timely_fraction = 1.5;
    CHECK_THROWS_AS(generate_synthetic(bad, 1), ConfigError);
    SynthConfig flipped;
    flipped.gase.min = 30;
    flipped.gase.max = 8;
    CHECK_THROWS_AS(generate_synthetic(flipped, 1), ConfigError);
}

TEST_CASE("generate_synthetic: impossible calibration errors out") {
    SynthConfig cfg;
    cfg.n_assignments = 1200;
    cfg.signal = {0, 0, 0, 0, 0, 0, 0};
    cfg.noise_sd = 0.0;
    cfg.student_intercept_sd = 0.0;
    cfg.course_intercept_sd = 0.0;
    // latent score constant per student-course cell: the quantile shift
    // cannot hit the target balance
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
}
