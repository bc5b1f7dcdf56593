#include "tardy/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <thread>

#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"

namespace tardy {

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
    if (k < 2) throw Error("kfold_indices: K must be >= 2");
    if (n < k) throw Error("kfold_indices: n must be >= K");
    Rng rng(derive_seed(seed, "kfold"));
    auto perm = rng.permutation(n);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t base = n / k, extra = n % k, pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<long>(pos),
                        perm.begin() + static_cast<long>(pos + size));
        pos += size;
    }
    return folds;
}

namespace {

struct FoldTask {
    std::size_t config_index;
    std::size_t fold_index;
};

}  // namespace

CvResult cross_validate(const HyperGrid& grid, const Matrix& X,
                        const std::vector<double>& y, const GroupStructure* groups,
                        std::size_t k_folds, std::uint64_t seed, double y_max,
                        std::size_t n_workers) {
    if (grid.configs.empty()) throw Error("cross_validate: empty grid");
    auto folds = kfold_indices(X.rows, k_folds, seed);

    // train/validation row sets per fold
    std::vector<std::vector<std::size_t>> train_rows(k_folds);
    for (std::size_t f = 0; f < k_folds; ++f) {
        for (std::size_t g = 0; g < k_folds; ++g) {
            if (g == f) continue;
            train_rows[f].insert(train_rows[f].end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_rows[f].begin(), train_rows[f].end());
    }

    const std::size_t n_configs = grid.configs.size();
    std::vector<CvFoldScore> scores(n_configs * k_folds);
    std::vector<std::string> errors(n_configs * k_folds);
    std::vector<char> failed(n_configs * k_folds, 0);

    auto run_task = [&](std::size_t c, std::size_t f) {
        const auto slot = c * k_folds + f;
        try {
            Matrix x_tr = X.take_rows(train_rows[f]);
            auto y_tr = take_values(y, train_rows[f]);
            GroupStructure g_tr;
            if (groups) g_tr = groups->take_rows(train_rows[f]);
            auto model = fit_model(grid.configs[c], x_tr, y_tr,
                                   groups ? &g_tr : nullptr,
                                   derive_seed(seed, "cv", c, f), y_max);
            Matrix x_val = X.take_rows(folds[f]);
            auto y_val = take_values(y, folds[f]);
            std::vector<double> pred;
            if (groups) {
                auto g_val = groups->take_rows(folds[f]);
                pred = model->predict(x_val, g_val);
            } else {
                pred = model->predict(x_val);
            }
            auto r = evaluate(pred, y_val, y_max);
            scores[slot] = {r.g, r.mae, r.f_tp, r.f_tn};
        } catch (const std::exception& ex) {
            failed[slot] = 1;
            errors[slot] = ex.what();
        }
    };

    const std::size_t n_tasks = n_configs * k_folds;
    if (n_workers <= 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) run_task(t / k_folds, t % k_folds);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t t = next.fetch_add(1);
                if (t >= n_tasks) return;
                run_task(t / k_folds, t % k_folds);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(n_workers, n_tasks); ++w)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // deterministic reduction in grid order
    CvResult result;
    result.table.resize(n_configs);
    double best_g = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    bool any_ok = false;
    for (std::size_t c = 0; c < n_configs; ++c) {
        auto& row = result.table[c];
        row.config = grid.configs[c];
        for (std::size_t f = 0; f < k_folds; ++f) {
            const auto slot = c * k_folds + f;
            if (failed[slot]) {
                row.failed = true;
                if (row.error.empty()) row.error = errors[slot];
            }
            row.folds.push_back(scores[slot]);
        }
        if (row.failed) {
            row.mean_g = -std::numeric_limits<double>::infinity();
            row.sd_g = 0.0;
            continue;
        }
        double mean = 0.0;
        for (const auto& f : row.folds) mean += f.g;
        mean /= static_cast<double>(k_folds);
        double ss = 0.0;
        for (const auto& f : row.folds) ss += (f.g - mean) * (f.g - mean);
        row.mean_g = mean;
        row.sd_g = k_folds > 1 ? std::sqrt(ss / static_cast<double>(k_folds - 1)) : 0.0;
        if (mean > best_g) {
            best_g = mean;
            best = c;
            any_ok = true;
        }
    }
    if (!any_ok)
        throw Error("cross_validate: every configuration failed (first error: " +
                    result.table[0].error + ")");
    result.best_index = best;
    return result;
}

namespace {

/// Cartesian expansion in row-major order over the declared parameter order.
struct GridBuilder {
    Family family;
    std::vector<std::pair<std::string, std::vector<double>>> nums;
    std::vector<std::pair<std::string, std::vector<std::string>>> strs;

    HyperGrid build() const {
        HyperGrid grid;
        grid.family = family;
        std::vector<HyperConfig> configs{HyperConfig{family, {}, {}}};
        for (const auto& [key, values] : strs) {
            std::vector<HyperConfig> next;
            for (const auto& c : configs)
                for (const auto& v : values) {
                    auto c2 = c;
                    c2.str[key] = v;
                    next.push_back(std::move(c2));
                }
            configs = std::move(next);
        }
        for (const auto& [key, values] : nums) {
            std::vector<HyperConfig> next;
            for (const auto& c : configs)
                for (double v : values) {
                    auto c2 = c;
                    c2.num[key] = v;
                    next.push_back(std::move(c2));
                }
            configs = std::move(next);
        }
        grid.configs = std::move(configs);
        return grid;
    }
};

std::string slope_columns_for(const std::vector<std::string>& feature_names) {
    std::string cols;
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        if (feature_names[j] == "clicks_assignment" ||
            feature_names[j] == "interval_days") {
            if (!cols.empty()) cols += ',';
            cols += std::to_string(j);
        }
    }
    return cols;
}

HyperGrid make_grid(Family family, const std::vector<std::string>& feature_names,
                    bool reduced) {
    const double p = static_cast<double>(feature_names.size());
    const double sqrt_p = std::max(1.0, std::floor(std::sqrt(p)));
    GridBuilder b;
    b.family = family;
    switch (family) {
        case Family::MLM_RI:
            return b.build();
        case Family::MLM_RS: {
            HyperGrid grid = b.build();
            grid.configs[0].str["slope_cols"] = slope_columns_for(feature_names);
            return grid;
        }
        case Family::NB:
            b.nums = {{"n_bins", reduced ? std::vector<double>{8, 32}
                                         : std::vector<double>{4, 8, 16, 32, 64}}};
            return b.build();
        case Family::KNN:
            b.strs = {{"weighting", {"uniform", "inverse_distance"}}};
            b.nums = {{"k", reduced ? std::vector<double>{5, 15}
                                    : std::vector<double>{1, 3, 5, 9, 15, 25}}};
            return b.build();
        case Family::RBFN:
            b.nums = {{"learning_rate", reduced ? std::vector<double>{0.2}
                                                : std::vector<double>{0.05, 0.2}},
                      {"gaussian_width", reduced ? std::vector<double>{1.0}
                                                 : std::vector<double>{0.5, 1.0, 2.0}},
                      {"max_epochs", {300}}};
            return b.build();
        case Family::FFNN:
            b.nums = {{"hidden_layers", {1}},
                      {"nodes_per_layer", reduced ? std::vector<double>{8}
                                                  : std::vector<double>{4, 8}},
                      {"learning_rate", reduced ? std::vector<double>{0.02}
                                                : std::vector<double>{0.005, 0.02}},
                      {"max_epochs", {200}}};
            return b.build();
        case Family::RT:
            b.nums = {{"min_node_size", reduced ? std::vector<double>{10}
                                                : std::vector<double>{5, 10, 20}},
                      {"minprop", {0.1}},
                      {"alpha", reduced ? std::vector<double>{0.5}
                                        : std::vector<double>{0.05, 0.5, 0.95}}};
            return b.build();
        case Family::RF:
            b.nums = {{"n_trees", {150}},
                      {"min_node_size", reduced ? std::vector<double>{5}
                                                : std::vector<double>{5, 10}},
                      {"n_split_vars", reduced || sqrt_p == p
                           ? std::vector<double>{sqrt_p}
                           : std::vector<double>{sqrt_p, p}},
                      {"n_random_cuts", reduced ? std::vector<double>{5}
                                                : std::vector<double>{1, 5}}};
            return b.build();
        case Family::GBM:
            b.strs = {{"loss", {"squared"}}};
            b.nums = {{"n_trees", {150}},
                      {"max_depth", reduced ? std::vector<double>{3}
                                            : std::vector<double>{2, 3}},
                      {"min_samples_split", {10}},
                      {"learning_rate", reduced ? std::vector<double>{0.1}
                                                : std::vector<double>{0.05, 0.1}},
                      {"subsample", {0.8}}};
            return b.build();
        case Family::SVR: {
            // all five kernels in one family grid; the per-kernel pipeline
            // variants narrow this down via variant_grid
            HyperGrid grid;
            grid.family = family;
            for (const char* kernel : {"lin", "pol", "tah", "rbf", "vs"}) {
                auto sub = svr_kernel_grid(kernel, reduced);
                grid.configs.insert(grid.configs.end(), sub.configs.begin(),
                                    sub.configs.end());
            }
            return grid;
        }
    }
    throw ConfigError("default_grid: unknown family");
}

}  // namespace

HyperGrid svr_kernel_grid(const std::string& kernel, bool reduced) {
    GridBuilder b;
    b.family = Family::SVR;
    b.strs = {{"kernel", {kernel}}};
    b.nums = {{"C", reduced ? std::vector<double>{2} : std::vector<double>{0.5, 4}},
              {"epsilon", reduced ? std::vector<double>{0.05}
                                  : std::vector<double>{0.02, 0.08}}};
    if (kernel == "pol")
        b.nums.push_back({"degree", reduced ? std::vector<double>{2}
                                            : std::vector<double>{2, 3}});
    else if (kernel == "tah")
        b.nums.push_back({"kappa", reduced ? std::vector<double>{0.5}
                                           : std::vector<double>{0.25, 1.0}});
    else if (kernel == "rbf" || kernel == "vs")
        b.nums.push_back({"gamma", reduced ? std::vector<double>{1.0}
                                           : std::vector<double>{0.5, 2.0}});
    return b.build();
}

HyperGrid default_grid(Family family, const std::vector<std::string>& feature_names) {
    return make_grid(family, feature_names, false);
}

HyperGrid reduced_grid(Family family, const std::vector<std::string>& feature_names) {
    return make_grid(family, feature_names, true);
}

const std::vector<std::string>& all_variants() {
    static const std::vector<std::string> variants = {
        "MLM-RI", "MLM-RS", "NB",      "KNN",     "RBFN",    "FFNN",   "RT",
        "RF",     "GBM",    "SVR-LIN", "SVR-POL", "SVR-TAH", "SVR-RBF", "SVR-VS"};
    return variants;
}

Family variant_family(const std::string& variant) {
    if (variant.rfind("SVR-", 0) == 0) return Family::SVR;
    return family_from_name(variant);
}

HyperGrid variant_grid(const std::string& variant,
                       const std::vector<std::string>& feature_names, bool reduced) {
    if (variant.rfind("SVR-", 0) == 0) {
        std::string kernel = variant.substr(4);
        std::transform(kernel.begin(), kernel.end(), kernel.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return svr_kernel_grid(kernel, reduced);
    }
    Family f = family_from_name(variant);
    return reduced ? reduced_grid(f, feature_names) : default_grid(f, feature_names);
}

}  // namespace tardy
