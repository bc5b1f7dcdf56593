#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tardy/model.hpp"

namespace tardy {

/// Ordered hyperparameter grid; order is the deterministic tie-breaker.
struct HyperGrid {
    Family family = Family::KNN;
    std::vector<HyperConfig> configs;
};

/// Seeded permutation cut into K near-equal folds (sizes differ by <= 1).
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

struct CvFoldScore {
    double g = 0.0;
    double e = 0.0;
    double f_tp = 0.0;
    double f_tn = 0.0;
};

struct CvConfigResult {
    HyperConfig config;
    double mean_g = 0.0;
    double sd_g = 0.0;
    std::vector<CvFoldScore> folds;
    bool failed = false;
    std::string error;
};

struct CvResult {
    std::vector<CvConfigResult> table;  // grid order
    std::size_t best_index = 0;

    const HyperConfig& best_config() const { return table[best_index].config; }
    double best_mean_g() const { return table[best_index].mean_g; }
};

/// K-fold grid search maximizing the mean G score across folds. Divergent
/// configs are excluded from the argmax rather than failing the search;
/// ties break toward the earlier grid entry. Deterministic for a fixed
/// seed regardless of worker count.
CvResult cross_validate(const HyperGrid& grid, const Matrix& X,
                        const std::vector<double>& y, const GroupStructure* groups,
                        std::size_t k_folds, std::uint64_t seed, double y_max = 1.0,
                        std::size_t n_workers = 1);

/// Version-pinned default grid per family. feature_names drive the
/// feature-count-dependent entries (split variables, slope columns).
HyperGrid default_grid(Family family, const std::vector<std::string>& feature_names);

/// Reduced grids for quick smoke runs: same structure, fewer points.
HyperGrid reduced_grid(Family family, const std::vector<std::string>& feature_names);

/// Base SVR grid restricted to one kernel, crossed with that kernel's
/// parameter values.
HyperGrid svr_kernel_grid(const std::string& kernel, bool reduced = false);

// Pipeline algorithm variants: every family once, each SVR kernel its own
// row (as the result tables present them).
const std::vector<std::string>& all_variants();
Family variant_family(const std::string& variant);
HyperGrid variant_grid(const std::string& variant,
                       const std::vector<std::string>& feature_names,
                       bool reduced = false);

}  // namespace tardy
