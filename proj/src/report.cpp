#include "tardy/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace tardy {

std::string CellKey::id() const {
    return algorithm + "__" + predictor_set_name(pset) + "__split" +
           std::to_string(split);
}

nlohmann::json CellResult::to_json() const {
    nlohmann::json j;
    j["algorithm"] = key.algorithm;
    j["predictor_set"] = predictor_set_name(key.pset);
    j["split"] = key.split;
    j["failed"] = failed;
    j["error"] = error;
    j["cv_mean_g"] = cv_mean_g;
    j["cv_sd_g"] = cv_sd_g;
    j["best_config"] = best_config;
    j["test"] = {{"f_tp", test.f_tp}, {"f_tn", test.f_tn}, {"ppv", test.ppv},
                 {"tpr", test.tpr},   {"mcc", test.mcc},   {"acc", test.acc},
                 {"mae", test.mae},   {"g", test.g}};
    j["importance"] = importance;
    j["seed"] = seed;
    j["duration_s"] = duration_s;
    return j;
}

CellResult CellResult::from_json(const nlohmann::json& j) {
    CellResult c;
    c.key.algorithm = j.at("algorithm").get<std::string>();
    c.key.pset = predictor_set_from_name(j.at("predictor_set").get<std::string>());
    c.key.split = j.at("split").get<std::size_t>();
    c.failed = j.at("failed").get<bool>();
    c.error = j.at("error").get<std::string>();
    c.cv_mean_g = j.at("cv_mean_g").get<double>();
    c.cv_sd_g = j.at("cv_sd_g").get<double>();
    c.best_config = j.at("best_config");
    const auto& t = j.at("test");
    c.test.f_tp = t.at("f_tp").get<double>();
    c.test.f_tn = t.at("f_tn").get<double>();
    c.test.ppv = t.at("ppv").get<double>();
    c.test.tpr = t.at("tpr").get<double>();
    c.test.mcc = t.at("mcc").get<double>();
    c.test.acc = t.at("acc").get<double>();
    c.test.mae = t.at("mae").get<double>();
    c.test.g = t.at("g").get<double>();
    c.importance = j.at("importance").get<std::vector<double>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.duration_s = j.at("duration_s").get<double>();
    return c;
}

const CellResult* ExperimentReport::find(const std::string& algorithm,
                                         PredictorSet pset,
                                         std::size_t split) const {
    for (const auto& c : cells)
        if (c.key.algorithm == algorithm && c.key.pset == pset && c.key.split == split)
            return &c;
    return nullptr;
}

std::vector<double> ExperimentReport::collect(const std::string& algorithm,
                                              PredictorSet pset,
                                              double MetricReport::* metric) const {
    std::vector<double> out;
    for (std::size_t s = 0; s < n_splits; ++s)
        if (const auto* c = find(algorithm, pset, s); c && !c->failed)
            out.push_back(c->test.*metric);
    return out;
}

std::vector<double> ExperimentReport::collect_cv_g(const std::string& algorithm,
                                                   PredictorSet pset) const {
    std::vector<double> out;
    for (std::size_t s = 0; s < n_splits; ++s)
        if (const auto* c = find(algorithm, pset, s); c && !c->failed)
            out.push_back(c->cv_mean_g);
    return out;
}

Aggregate aggregate(std::span<const double> values) {
    if (values.size() < 2) throw Error("aggregate: need at least 2 entries");
    Aggregate a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return a;
}

namespace {

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string ratio4(Aggregate a) { return fmt(a.mean, 4) + " (" + fmt(a.sd, 4) + ")"; }
std::string pct2(Aggregate a) {
    return fmt(100.0 * a.mean, 2) + " (" + fmt(100.0 * a.sd, 2) + ")";
}

struct TableWriter {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<bool>> bold;  // parallel to rows; may stay empty

    void add_row(std::vector<std::string> cells) {
        rows.push_back(std::move(cells));
        bold.emplace_back(rows.back().size(), false);
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open file for writing: " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out << header[i] << (i + 1 < header.size() ? "," : "");
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << row[i] << (i + 1 < row.size() ? "," : "");
            out << '\n';
        }
    }

    void write_markdown(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open file for writing: " + path);
        out << '|';
        for (const auto& h : header) out << ' ' << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
        out << '\n';
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out << '|';
            for (std::size_t i = 0; i < rows[r].size(); ++i) {
                if (bold[r][i])
                    out << " **" << rows[r][i] << "** |";
                else
                    out << ' ' << rows[r][i] << " |";
            }
            out << '\n';
        }
    }
};

void write_table(const TableWriter& t, const std::filesystem::path& dir,
                 const std::string& stem, TableFormat format) {
    if (format != TableFormat::MARKDOWN) t.write_csv((dir / (stem + ".csv")).string());
    if (format != TableFormat::CSV) t.write_markdown((dir / (stem + ".md")).string());
}

// "45.56 (5.40)" in csv cells would collide with the comma separator, so
// csv tables carry the same formatted strings in separate mean/sd columns.
void push_pair(std::vector<std::string>& row, const std::string& rendered) {
    auto open = rendered.find(" (");
    row.push_back(rendered.substr(0, open));
    row.push_back(rendered.substr(open + 2, rendered.size() - open - 3));
}

}  // namespace

std::vector<GapRow> cv_test_gap(const ExperimentReport& report) {
    std::vector<GapRow> rows;
    for (const auto& algo : report.algorithms) {
        for (auto pset : report.psets) {
            auto cv = report.collect_cv_g(algo, pset);
            auto test = report.collect(algo, pset, &MetricReport::g);
            if (cv.size() < 2 || test.size() < 2)
                throw Error("cv_test_gap: missing entries for " + algo + "/" +
                            predictor_set_name(pset));
            rows.push_back({algo, pset, aggregate(cv).mean - aggregate(test).mean});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const GapRow& a, const GapRow& b) {
        if (a.gap != b.gap) return a.gap < b.gap;
        if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
        return static_cast<int>(a.pset) < static_cast<int>(b.pset);
    });
    return rows;
}

void emit_tables(const ExperimentReport& report, const std::string& out_dir,
                 TableFormat format) {
    // completeness gate
    std::string missing;
    for (const auto& algo : report.algorithms)
        for (auto pset : report.psets)
            for (std::size_t s = 0; s < report.n_splits; ++s) {
                const auto* c = report.find(algo, pset, s);
                if (!c || c->failed) {
                    missing += std::string("\n  ") + algo + "/" +
                               predictor_set_name(pset) + "/split" + std::to_string(s) +
                               (c ? " (failed: " + c->error + ")" : " (missing)");
                }
            }
    if (!missing.empty()) throw Error("incomplete report; missing cells:" + missing);

    namespace fs = std::filesystem;
    fs::path dir = fs::path(out_dir) / "report";
    fs::create_directories(dir);

    // G-score comparison (cross-validation vs test per predictor set)
    {
        TableWriter t;
        t.header = {"algorithm"};
        for (auto p : report.psets) {
            t.header.push_back(std::string("cv_") + predictor_set_name(p));
            t.header.push_back(std::string("cv_") + predictor_set_name(p) + "_sd");
        }
        for (auto p : report.psets) {
            t.header.push_back(std::string("test_") + predictor_set_name(p));
            t.header.push_back(std::string("test_") + predictor_set_name(p) + "_sd");
        }
        for (const auto& algo : report.algorithms) {
            std::vector<std::string> row{algo};
            for (auto p : report.psets)
                push_pair(row, ratio4(aggregate(report.collect_cv_g(algo, p))));
            for (auto p : report.psets)
                push_pair(row,
                          ratio4(aggregate(report.collect(algo, p, &MetricReport::g))));
            t.add_row(std::move(row));
        }
        write_table(t, dir, "gscores", format);
    }

    // intra-model tables, one per predictor set
    struct Column {
        const char* name;
        double MetricReport::* metric;
        bool percent;
        bool lower_is_better;
    };
    const Column columns[] = {
        {"ppv", &MetricReport::ppv, true, false},
        {"tpr", &MetricReport::tpr, true, false},
        {"f_tp", &MetricReport::f_tp, true, false},
        {"f_tn", &MetricReport::f_tn, true, false},
        {"mcc", &MetricReport::mcc, true, false},
        {"acc", &MetricReport::acc, true, false},
        {"mae_days", &MetricReport::mae, false, true},
    };

    auto render_metric = [&](const Column& col, Aggregate a) {
        if (col.percent) return pct2(a);
        // MAE back to days at emission only
        return fmt(a.mean * report.delay_scale, 2) + " (" +
               fmt(a.sd * report.delay_scale, 2) + ")";
    };

    for (auto pset : report.psets) {
        TableWriter t;
        t.header = {"algorithm"};
        for (const auto& col : columns) {
            t.header.push_back(col.name);
            t.header.push_back(std::string(col.name) + "_sd");
        }
        t.header.push_back("best_in");

        std::vector<std::vector<Aggregate>> agg(report.algorithms.size());
        for (std::size_t a = 0; a < report.algorithms.size(); ++a)
            for (const auto& col : columns)
                agg[a].push_back(
                    aggregate(report.collect(report.algorithms[a], pset, col.metric)));

        // flag the best row per column
        std::vector<std::size_t> best_row(std::size(columns), 0);
        for (std::size_t c = 0; c < std::size(columns); ++c)
            for (std::size_t a = 1; a < report.algorithms.size(); ++a) {
                bool better = columns[c].lower_is_better
                                  ? agg[a][c].mean < agg[best_row[c]][c].mean
                                  : agg[a][c].mean > agg[best_row[c]][c].mean;
                if (better) best_row[c] = a;
            }

        for (std::size_t a = 0; a < report.algorithms.size(); ++a) {
            std::vector<std::string> row{report.algorithms[a]};
            std::string best_in;
            for (std::size_t c = 0; c < std::size(columns); ++c) {
                push_pair(row, render_metric(columns[c], agg[a][c]));
                if (best_row[c] == a)
                    best_in += std::string(best_in.empty() ? "" : ";") + columns[c].name;
            }
            row.push_back(best_in);
            t.add_row(std::move(row));
            for (std::size_t c = 0; c < std::size(columns); ++c)
                if (best_row[c] == a) {
                    t.bold.back()[1 + 2 * c] = true;
                    t.bold.back()[2 + 2 * c] = true;
                }
        }
        write_table(t, dir, std::string("intra_") + predictor_set_name(pset), format);
    }

    // inter-model winners: max mean test G per predictor set
    {
        TableWriter t;
        t.header = {"predictor_set", "algorithm"};
        for (const auto& col : columns) {
            t.header.push_back(col.name);
            t.header.push_back(std::string(col.name) + "_sd");
        }
        t.header.push_back("test_g");
        t.header.push_back("test_g_sd");
        for (auto pset : report.psets) {
            std::size_t winner = 0;
            double best_g = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < report.algorithms.size(); ++a) {
                double g =
                    aggregate(report.collect(report.algorithms[a], pset, &MetricReport::g))
                        .mean;
                if (g > best_g) {
                    best_g = g;
                    winner = a;
                }
            }
            const auto& algo = report.algorithms[winner];
            std::vector<std::string> row{predictor_set_name(pset), algo};
            for (const auto& col : columns)
                push_pair(row, render_metric(col, aggregate(report.collect(
                                                      algo, pset, col.metric))));
            push_pair(row, ratio4(aggregate(report.collect(algo, pset, &MetricReport::g))));
            t.add_row(std::move(row));
        }
        write_table(t, dir, "inter", format);
    }

    // feature importance per tree-ensemble cell group
    {
        TableWriter t;
        t.header = {"algorithm", "predictor_set", "feature", "mean", "sd"};
        for (const auto& algo : report.algorithms) {
            for (auto pset : report.psets) {
                auto feats = predictor_features(pset);
                bool have_all = true;
                for (std::size_t s = 0; s < report.n_splits && have_all; ++s) {
                    const auto* c = report.find(algo, pset, s);
                    have_all = c && c->importance.size() == feats.size();
                }
                if (!have_all) continue;
                for (std::size_t f = 0; f < feats.size(); ++f) {
                    std::vector<double> vals;
                    for (std::size_t s = 0; s < report.n_splits; ++s)
                        vals.push_back(report.find(algo, pset, s)->importance[f]);
                    auto a = aggregate(vals);
                    t.add_row({algo, predictor_set_name(pset), feature_name(feats[f]),
                               fmt(a.mean, 4), fmt(a.sd, 4)});
                }
            }
        }
        write_table(t, dir, "importance", format);
    }

    // run metadata
    {
        nlohmann::json meta = report.meta;
        meta["n_splits"] = report.n_splits;
        meta["algorithms"] = report.algorithms;
        nlohmann::json psets = nlohmann::json::array();
        for (auto p : report.psets) psets.push_back(predictor_set_name(p));
        meta["predictor_sets"] = psets;
        meta["delay_scale"] = report.delay_scale;
        std::ofstream out(dir / "meta.json");
        if (!out) throw Error("cannot write meta.json");
        out << meta.dump(2) << '\n';
    }
}

}  // namespace tardy
