#include "tardy/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"

namespace tardy {

namespace {

ColumnTarget column_from_json(const nlohmann::json& j, ColumnTarget fallback) {
    ColumnTarget t = fallback;
    if (j.contains("mean")) t.mean = j.at("mean").get<double>();
    if (j.contains("sd")) t.sd = j.at("sd").get<double>();
    if (j.contains("min")) t.min = j.at("min").get<double>();
    if (j.contains("max")) t.max = j.at("max").get<double>();
    return t;
}

nlohmann::json column_to_json(const ColumnTarget& t) {
    return {{"mean", t.mean}, {"sd", t.sd}, {"min", t.min}, {"max", t.max}};
}

SynthConfig synth_from_json(const nlohmann::json& j) {
    SynthConfig s;
    if (j.contains("n_students")) s.n_students = j.at("n_students").get<std::size_t>();
    if (j.contains("n_courses")) s.n_courses = j.at("n_courses").get<std::size_t>();
    if (j.contains("n_assignments"))
        s.n_assignments = j.at("n_assignments").get<std::size_t>();
    if (j.contains("target_timely_fraction"))
        s.target_timely_fraction = j.at("target_timely_fraction").get<double>();
    if (j.contains("columns")) {
        const auto& cols = j.at("columns");
        auto get = [&](const char* name, ColumnTarget& t) {
            if (cols.contains(name)) t = column_from_json(cols.at(name), t);
        };
        get("gase", s.gase);
        get("sdls", s.sdls);
        get("apss", s.apss);
        get("aps", s.aps);
        get("clicks_assignment", s.clicks_assignment);
        get("interval_days", s.interval_days);
        get("clicks_activities", s.clicks_activities);
        get("delay", s.delay);
    }
    if (j.contains("signal")) {
        const auto& sig = j.at("signal");
        auto feats = predictor_features(PredictorSet::COMB);
        for (std::size_t f = 0; f < feats.size(); ++f)
            if (sig.contains(feature_name(feats[f])))
                s.signal[f] = sig.at(feature_name(feats[f])).get<double>();
    }
    if (j.contains("student_intercept_sd"))
        s.student_intercept_sd = j.at("student_intercept_sd").get<double>();
    if (j.contains("course_intercept_sd"))
        s.course_intercept_sd = j.at("course_intercept_sd").get<double>();
    if (j.contains("course_slope_sd"))
        s.course_slope_sd = j.at("course_slope_sd").get<double>();
    if (j.contains("noise_sd")) s.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("min_courses_per_student"))
        s.min_courses_per_student = j.at("min_courses_per_student").get<std::size_t>();
    if (j.contains("max_courses_per_student"))
        s.max_courses_per_student = j.at("max_courses_per_student").get<std::size_t>();
    return s;
}

nlohmann::json synth_to_json(const SynthConfig& s) {
    nlohmann::json j;
    j["n_students"] = s.n_students;
    j["n_courses"] = s.n_courses;
    j["n_assignments"] = s.n_assignments;
    j["target_timely_fraction"] = s.target_timely_fraction;
    j["columns"] = {{"gase", column_to_json(s.gase)},
                    {"sdls", column_to_json(s.sdls)},
                    {"apss", column_to_json(s.apss)},
                    {"aps", column_to_json(s.aps)},
                    {"clicks_assignment", column_to_json(s.clicks_assignment)},
                    {"interval_days", column_to_json(s.interval_days)},
                    {"clicks_activities", column_to_json(s.clicks_activities)},
                    {"delay", column_to_json(s.delay)}};
    nlohmann::json sig;
    auto feats = predictor_features(PredictorSet::COMB);
    for (std::size_t f = 0; f < feats.size(); ++f)
        sig[feature_name(feats[f])] = s.signal[f];
    j["signal"] = sig;
    j["student_intercept_sd"] = s.student_intercept_sd;
    j["course_intercept_sd"] = s.course_intercept_sd;
    j["course_slope_sd"] = s.course_slope_sd;
    j["noise_sd"] = s.noise_sd;
    j["min_courses_per_student"] = s.min_courses_per_student;
    j["max_courses_per_student"] = s.max_courses_per_student;
    return j;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.seed_set = true;
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        std::string source = d.value("source", "synth");
        if (source == "csv") {
            c.csv_path = d.at("path").get<std::string>();
        } else if (source == "synth") {
            c.synth = d.contains("synth") ? synth_from_json(d.at("synth"))
                                          : SynthConfig{};
        } else {
            throw ConfigError("data.source must be 'csv' or 'synth'");
        }
    } else {
        c.synth = SynthConfig{};
    }
    if (j.contains("algorithms"))
        c.algorithms = j.at("algorithms").get<std::vector<std::string>>();
    if (j.contains("predictor_sets")) {
        c.psets.clear();
        for (const auto& p : j.at("predictor_sets"))
            c.psets.push_back(predictor_set_from_name(p.get<std::string>()));
    }
    if (j.contains("cv_folds")) c.cv_folds = j.at("cv_folds").get<std::size_t>();
    if (j.contains("n_splits")) c.n_splits = j.at("n_splits").get<std::size_t>();
    if (j.contains("train_fraction"))
        c.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("normalization_scope")) {
        std::string scope = j.at("normalization_scope").get<std::string>();
        if (scope == "all_rows")
            c.scope = NormalizationScope::ALL_ROWS;
        else if (scope == "train_only")
            c.scope = NormalizationScope::TRAIN_ONLY;
        else
            throw ConfigError("normalization_scope must be all_rows or train_only");
    }
    if (j.contains("reduced_grids")) c.reduced_grids = j.at("reduced_grids").get<bool>();
    if (j.contains("grid_overrides")) c.grid_overrides = j.at("grid_overrides");
    if (j.contains("grid_overrides_path")) {
        std::ifstream in(j.at("grid_overrides_path").get<std::string>());
        if (!in)
            throw ConfigError("cannot open grid overrides file: " +
                              j.at("grid_overrides_path").get<std::string>());
        in >> c.grid_overrides;
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<std::size_t>();
    if (j.contains("format")) {
        std::string f = j.at("format").get<std::string>();
        if (f == "csv")
            c.format = TableFormat::CSV;
        else if (f == "md")
            c.format = TableFormat::MARKDOWN;
        else if (f == "both")
            c.format = TableFormat::BOTH;
        else
            throw ConfigError("format must be csv, md or both");
    }
    if (j.contains("save_models")) c.save_models = j.at("save_models").get<bool>();
    if (c.algorithms.empty()) c.algorithms = all_variants();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    if (csv_path)
        j["data"] = {{"source", "csv"}, {"path", *csv_path}};
    else
        j["data"] = {{"source", "synth"}, {"synth", synth_to_json(*synth)}};
    j["algorithms"] = algorithms;
    nlohmann::json psets_json = nlohmann::json::array();
    for (auto p : psets) psets_json.push_back(predictor_set_name(p));
    j["predictor_sets"] = psets_json;
    j["cv_folds"] = cv_folds;
    j["n_splits"] = n_splits;
    j["train_fraction"] = train_fraction;
    j["normalization_scope"] =
        scope == NormalizationScope::ALL_ROWS ? "all_rows" : "train_only";
    j["reduced_grids"] = reduced_grids;
    j["grid_overrides"] = grid_overrides;
    j["format"] = format == TableFormat::CSV
                      ? "csv"
                      : (format == TableFormat::MARKDOWN ? "md" : "both");
    j["save_models"] = save_models;
    return j;
}

void RunConfig::validate() const {
    if (!seed_set) throw ConfigError("seed is required (no wall-clock default)");
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    if (psets.empty()) throw ConfigError("at least one predictor set is required");
    for (const auto& a : algorithms) variant_family(a);  // throws on unknown
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    if (n_splits < 1) throw ConfigError("n_splits must be >= 1");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ConfigError("train_fraction must be in (0, 1)");
    if (!csv_path && !synth) throw ConfigError("a data source is required");
    if (synth) {
        if (synth->target_timely_fraction <= 0.0 ||
            synth->target_timely_fraction >= 1.0)
            throw ConfigError("target_timely_fraction must be in (0, 1)");
    }
}

HyperGrid grid_for(const RunConfig& config, const std::string& variant,
                   const std::vector<std::string>& feature_names) {
    if (config.grid_overrides.contains(variant)) {
        const auto& o = config.grid_overrides.at(variant);
        HyperGrid grid;
        grid.family = variant_family(variant);
        std::vector<HyperConfig> configs{HyperConfig{grid.family, {}, {}}};
        if (o.contains("str")) {
            for (const auto& [key, values] : o.at("str").items()) {
                std::vector<HyperConfig> next;
                for (const auto& c : configs)
                    for (const auto& v : values) {
                        auto c2 = c;
                        c2.str[key] = v.get<std::string>();
                        next.push_back(std::move(c2));
                    }
                configs = std::move(next);
            }
        }
        if (o.contains("num")) {
            for (const auto& [key, values] : o.at("num").items()) {
                std::vector<HyperConfig> next;
                for (const auto& c : configs)
                    for (const auto& v : values) {
                        auto c2 = c;
                        c2.num[key] = v.get<double>();
                        next.push_back(std::move(c2));
                    }
                configs = std::move(next);
            }
        }
        if (configs.empty()) throw ConfigError("grid override for " + variant + " is empty");
        // SVR variants pin their kernel even when overridden
        if (variant.rfind("SVR-", 0) == 0) {
            auto base = variant_grid(variant, feature_names, true);
            for (auto& c : configs)
                if (!c.str.contains("kernel")) c.str["kernel"] = base.configs[0].str.at("kernel");
        }
        grid.configs = std::move(configs);
        return grid;
    }
    return variant_grid(variant, feature_names, config.reduced_grids);
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t split,
                        PredictorSet pset, const std::string& variant) {
    return derive_seed(master_seed, "cell", split, predictor_set_name(pset), variant);
}

namespace {

struct SplitView {
    ProblemData problems[3];  // indexed by PredictorSet
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    double delay_scale = 1.0;
};

std::uint64_t config_fingerprint(const RunConfig& config, const HyperGrid& grid) {
    std::uint64_t h = derive_seed(config.seed, "fingerprint");
    h = hash_combine(h, grid.family == Family::SVR ? "svr" : family_name(grid.family));
    nlohmann::json g = nlohmann::json::array();
    for (const auto& c : grid.configs) g.push_back(c.to_json());
    h = hash_combine(h, g.dump());
    h = hash_combine(h, config.cv_folds);
    h = hash_combine(h, config.n_splits);
    h = hash_combine(h, static_cast<std::uint64_t>(config.scope));
    return h;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();

    Dataset raw;
    std::size_t dropped = 0;
    if (config.csv_path) {
        auto records = load_csv(*config.csv_path);
        auto clean = drop_missing(records);
        raw = std::move(clean.dataset);
        dropped = clean.dropped;
    } else {
        raw = generate_synthetic(*config.synth, config.seed);
    }

    auto plan = make_split_plan(raw.n(), config.seed, config.n_splits,
                                config.train_fraction);

    // normalization views: one shared for ALL_ROWS, one per split otherwise
    auto global_scales = fit_normalizer(raw);
    std::vector<SplitView> views(config.n_splits);
    {
        Dataset normalized_all;
        ProblemData shared[3];
        if (config.scope == NormalizationScope::ALL_ROWS) {
            normalized_all = apply_normalizer(raw, global_scales);
            for (auto p : {PredictorSet::SUBJ, PredictorSet::OBJ, PredictorSet::COMB})
                shared[static_cast<int>(p)] = project(normalized_all, p);
        }
        for (std::size_t s = 0; s < config.n_splits; ++s) {
            views[s].train_rows = plan.partitions[s].train;
            views[s].test_rows = plan.partitions[s].test;
            if (config.scope == NormalizationScope::ALL_ROWS) {
                for (int p = 0; p < 3; ++p) views[s].problems[p] = shared[p];
                views[s].delay_scale = global_scales.delay;
            } else {
                auto scales = fit_normalizer(raw, views[s].train_rows);
                auto normalized = apply_normalizer(raw, scales);
                for (auto p :
                     {PredictorSet::SUBJ, PredictorSet::OBJ, PredictorSet::COMB})
                    views[s].problems[static_cast<int>(p)] = project(normalized, p);
                views[s].delay_scale = scales.delay;
            }
        }
    }

    fs::create_directories(fs::path(config.out_dir) / "cells");
    if (config.save_models)
        fs::create_directories(fs::path(config.out_dir) / "models");

    struct Cell {
        std::size_t split;
        PredictorSet pset;
        std::string variant;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < config.n_splits; ++s)
        for (auto pset : config.psets)
            for (const auto& algo : config.algorithms) cells.push_back({s, pset, algo});

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> n_failed{0};
    std::atomic<std::size_t> n_reused{0};
    std::mutex io_mutex;

    auto run_cell = [&](std::size_t index) {
        const auto& cell = cells[index];
        CellResult result;
        result.key = {cell.variant, cell.pset, cell.split};
        const auto& view = views[cell.split];
        const auto& problem = view.problems[static_cast<int>(cell.pset)];
        auto grid = grid_for(config, cell.variant, problem.feature_names);
        const std::uint64_t fingerprint = config_fingerprint(config, grid);
        const fs::path cell_path =
            fs::path(config.out_dir) / "cells" / (result.key.id() + ".json");

        if (fs::exists(cell_path)) {
            try {
                std::ifstream in(cell_path);
                nlohmann::json j;
                in >> j;
                if (j.value("fingerprint", std::uint64_t{0}) == fingerprint) {
                    auto cached = CellResult::from_json(j);
                    if (!cached.failed) {
                        results[index] = std::move(cached);
                        n_reused.fetch_add(1);
                        return;
                    }
                }
            } catch (const std::exception&) {
                // unreadable cache entry: recompute
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed =
            cell_seed(config.seed, cell.split, cell.pset, cell.variant);
        result.seed = seed;
        try {
            auto x_train = problem.X.take_rows(view.train_rows);
            auto y_train = take_values(problem.y, view.train_rows);
            auto g_train = problem.groups.take_rows(view.train_rows);

            auto cv = cross_validate(grid, x_train, y_train, &g_train,
                                     config.cv_folds, seed, 1.0, 1);
            result.cv_mean_g = cv.best_mean_g();
            result.cv_sd_g = cv.table[cv.best_index].sd_g;
            result.best_config = cv.best_config().to_json();

            auto model = fit_model(cv.best_config(), x_train, y_train, &g_train,
                                   derive_seed(seed, "final"), 1.0);
            auto x_test = problem.X.take_rows(view.test_rows);
            auto y_test = take_values(problem.y, view.test_rows);
            auto g_test = problem.groups.take_rows(view.test_rows);
            auto pred = model->predict(x_test, g_test);
            result.test = evaluate(pred, y_test, 1.0);

            if (dynamic_cast<const ImportanceProvider*>(model.get()))
                result.importance = feature_importance(*model);
            if (config.save_models)
                save_model(*model, (fs::path(config.out_dir) / "models" /
                                    (result.key.id() + ".json"))
                                       .string());
        } catch (const std::exception& ex) {
            result.failed = true;
            result.error = ex.what();
            n_failed.fetch_add(1);
        }
        result.duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();

        {
            nlohmann::json j = result.to_json();
            j["fingerprint"] = fingerprint;
            std::lock_guard<std::mutex> lock(io_mutex);
            std::ofstream out(cell_path);
            out << j.dump(2) << '\n';
        }
        results[index] = std::move(result);
    };

    std::size_t jobs = config.jobs > 0
                           ? config.jobs
                           : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, cells.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                run_cell(i);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    RunOutcome outcome;
    outcome.cells_failed = n_failed.load();
    outcome.cells_reused = n_reused.load();
    auto& report = outcome.report;
    report.algorithms = config.algorithms;
    report.psets = config.psets;
    report.n_splits = config.n_splits;
    report.delay_scale = global_scales.delay;
    report.cells = std::move(results);
    report.meta["master_seed"] = config.seed;
    report.meta["config"] = config.to_json();
    report.meta["n_rows"] = raw.n();
    report.meta["rows_dropped"] = dropped;
    report.meta["n_cells"] = cells.size();
    report.meta["cells_failed"] = outcome.cells_failed;
    report.meta["total_duration_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();

    if (outcome.cells_failed == 0)
        emit_tables(report, config.out_dir, config.format);
    return outcome;
}

ExperimentReport report_from_cells(const RunConfig& config) {
    namespace fs = std::filesystem;
    ExperimentReport report;
    report.algorithms = config.algorithms;
    report.psets = config.psets;
    report.n_splits = config.n_splits;

    Dataset raw;
    if (config.csv_path) {
        auto clean = drop_missing(load_csv(*config.csv_path));
        raw = std::move(clean.dataset);
    } else {
        raw = generate_synthetic(*config.synth, config.seed);
    }
    report.delay_scale = fit_normalizer(raw).delay;

    fs::path dir = fs::path(config.out_dir) / "cells";
    if (!fs::exists(dir)) throw Error("no persisted cells under " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        nlohmann::json j;
        in >> j;
        report.cells.push_back(CellResult::from_json(j));
    }
    report.meta["master_seed"] = config.seed;
    report.meta["config"] = config.to_json();
    report.meta["n_cells"] = report.cells.size();
    return report;
}

}  // namespace tardy
