#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"
#include "tardy/tuning.hpp"

using namespace tardy;

namespace {

struct Problem {
    Matrix X;
    std::vector<double> y;
};

Problem smooth_problem(std::size_t n, std::uint64_t seed, double noise) {
    Rng rng(seed);
    Problem pr{Matrix(n, 2), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        pr.X.at(i, 0) = rng.uniform(-1.0, 1.0);
        pr.X.at(i, 1) = rng.uniform(-1.0, 1.0);
        pr.y[i] = 0.8 * std::sin(2.0 * pr.X.at(i, 0)) + rng.normal(0.0, noise);
    }
    return pr;
}

HyperGrid knn_grid(std::vector<double> ks) {
    HyperGrid grid;
    grid.family = Family::KNN;
    for (double k : ks)
        grid.configs.push_back(
            HyperConfig{Family::KNN, {{"k", k}}, {{"weighting", "uniform"}}});
    return grid;
}

}  // namespace

TEST_CASE("kfold_indices: shapes, exactness, determinism") {
    auto folds = kfold_indices(888, 4, 3);
    REQUIRE(folds.size() == 4);
    for (const auto& f : folds) CHECK(f.size() == 222);

    std::set<std::size_t> all;
    for (const auto& f : folds) all.insert(f.begin(), f.end());
    CHECK(all.size() == 888);  // disjoint exact cover

    auto halves = kfold_indices(10, 2, 1);
    CHECK(halves[0].size() == 5);
    CHECK(halves[1].size() == 5);

    // near-equal folds when K does not divide n
    auto uneven = kfold_indices(885, 4, 9);
    std::vector<std::size_t> sizes;
    for (const auto& f : uneven) sizes.push_back(f.size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes.front() == 221);
    CHECK(sizes.back() == 222);

    CHECK(kfold_indices(100, 4, 5) == kfold_indices(100, 4, 5));
    CHECK(kfold_indices(100, 4, 5) != kfold_indices(100, 4, 6));

    CHECK_THROWS_AS(kfold_indices(3, 4, 1), Error);
    CHECK_THROWS_AS(kfold_indices(10, 1, 1), Error);
}

TEST_CASE("cross_validate: singleton grid returns it with the fold average") {
    auto pr = smooth_problem(120, 5, 0.1);
    auto grid = knn_grid({5});
    auto cv = cross_validate(grid, pr.X, pr.y, nullptr, 4, 7);
    CHECK(cv.best_index == 0);
    REQUIRE(cv.table[0].folds.size() == 4);
    double mean = 0;
    for (const auto& f : cv.table[0].folds) mean += f.g;
    mean /= 4.0;
    CHECK(cv.best_mean_g() == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("cross_validate: matches a hand-orchestrated fold loop") {
    auto pr = smooth_problem(80, 9, 0.15);
    auto grid = knn_grid({1, 5, 20});
    const std::uint64_t seed = 31;
    auto cv = cross_validate(grid, pr.X, pr.y, nullptr, 4, seed);

    // independent loop: same fold definitions, naive orchestration
    auto folds = kfold_indices(80, 4, seed);
    for (std::size_t c = 0; c < grid.configs.size(); ++c) {
        double mean = 0;
        for (std::size_t f = 0; f < 4; ++f) {
            std::vector<std::size_t> train;
            for (std::size_t g = 0; g < 4; ++g)
                if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
            std::sort(train.begin(), train.end());
            auto model = fit_model(grid.configs[c], pr.X.take_rows(train),
                                   take_values(pr.y, train), nullptr,
                                   derive_seed(seed, "cv", c, f), 1.0);
            auto pred = model->predict(pr.X.take_rows(folds[f]));
            auto val = take_values(pr.y, folds[f]);
            mean += evaluate(pred, val, 1.0).g;
        }
        mean /= 4.0;
        CHECK(cv.table[c].mean_g == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("cross_validate: planted optimum for KNN k") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto pr = smooth_problem(400, derive_seed(100, seed), 0.25);
        auto grid = knn_grid({1, 5, 50});
        auto cv = cross_validate(grid, pr.X, pr.y, nullptr, 4, seed);
        if (cv.best_config().get_num("k") == 5) ++hits;
    }
    CHECK(hits >= 8);  // k=1 overfits, k=50 oversmooths
}

TEST_CASE("cross_validate: selection optimality and tie-breaking") {
    auto pr = smooth_problem(100, 13, 0.1);
    // duplicated config: identical scores, grid order must break the tie
    auto grid = knn_grid({7, 7, 3});
    auto cv = cross_validate(grid, pr.X, pr.y, nullptr, 4, 5);
    double best = -1e300;
    for (const auto& row : cv.table) best = std::max(best, row.mean_g);
    CHECK(cv.best_mean_g() == best);
    CHECK(cv.table[0].mean_g == cv.table[1].mean_g);
    if (cv.table[0].mean_g >= cv.table[2].mean_g) CHECK(cv.best_index == 0);
}

TEST_CASE("cross_validate: parallel equals serial") {
    auto pr = smooth_problem(150, 17, 0.1);
    HyperGrid grid;
    grid.family = Family::RF;
    for (double trees : {5, 10})
        grid.configs.push_back(HyperConfig{
            Family::RF,
            {{"n_trees", trees}, {"min_node_size", 5}, {"n_split_vars", 1},
             {"n_random_cuts", 2}},
            {}});
    auto serial = cross_validate(grid, pr.X, pr.y, nullptr, 4, 21, 1.0, 1);
    auto parallel = cross_validate(grid, pr.X, pr.y, nullptr, 4, 21, 1.0, 4);
    CHECK(serial.best_index == parallel.best_index);
    for (std::size_t c = 0; c < grid.configs.size(); ++c) {
        CHECK(serial.table[c].mean_g == parallel.table[c].mean_g);
        for (std::size_t f = 0; f < 4; ++f)
            CHECK(serial.table[c].folds[f].g == parallel.table[c].folds[f].g);
    }
}

TEST_CASE("cross_validate: divergent configs are excluded, not fatal") {
    auto pr = smooth_problem(60, 23, 0.1);
    HyperGrid grid;
    grid.family = Family::KNN;
    grid.configs.push_back(HyperConfig{Family::KNN, {{"k", 1e6}}, {}});  // k > n
    grid.configs.push_back(HyperConfig{Family::KNN, {{"k", 5}}, {}});
    auto cv = cross_validate(grid, pr.X, pr.y, nullptr, 4, 3);
    CHECK(cv.table[0].failed);
    CHECK(!cv.table[0].error.empty());
    CHECK(cv.best_index == 1);

    HyperGrid all_bad;
    all_bad.family = Family::KNN;
    all_bad.configs.push_back(HyperConfig{Family::KNN, {{"k", 1e6}}, {}});
    CHECK_THROWS_AS(cross_validate(all_bad, pr.X, pr.y, nullptr, 4, 3), Error);
}

TEST_CASE("default_grid shapes") {
    std::vector<std::string> comb = {"clicks_assignment", "interval_days",
                                     "clicks_activities", "gase",
                                     "sdls",              "apss",
                                     "aps"};
    auto knn = default_grid(Family::KNN, comb);
    CHECK(knn.configs.size() == 12);  // 6 k values x 2 weightings
    auto nb = default_grid(Family::NB, comb);
    CHECK(nb.configs.size() == 5);
    auto mlm = default_grid(Family::MLM_RI, comb);
    CHECK(mlm.configs.size() == 1);  // no tunable hyperparameters

    auto rs = default_grid(Family::MLM_RS, comb);
    CHECK(rs.configs[0].get_str("slope_cols") == "0,1");
    std::vector<std::string> subj = {"gase", "sdls", "apss", "aps"};
    auto rs_subj = default_grid(Family::MLM_RS, subj);
    CHECK(rs_subj.configs[0].get_str("slope_cols").empty());

    auto svr = default_grid(Family::SVR, comb);
    std::set<std::string> kernels;
    for (const auto& c : svr.configs) kernels.insert(c.get_str("kernel"));
    CHECK(kernels == std::set<std::string>{"lin", "pol", "tah", "rbf", "vs"});

    auto rbf_only = svr_kernel_grid("rbf");
    for (const auto& c : rbf_only.configs) {
        CHECK(c.get_str("kernel") == "rbf");
        CHECK(c.num.contains("gamma"));
    }

    // grid order is deterministic
    auto again = default_grid(Family::KNN, comb);
    for (std::size_t i = 0; i < knn.configs.size(); ++i)
        CHECK(knn.configs[i].to_json() == again.configs[i].to_json());
}

TEST_CASE("variant helpers") {
    CHECK(all_variants().size() == 14);
    CHECK(variant_family("SVR-VS") == Family::SVR);
    CHECK(variant_family("RF") == Family::RF);
    CHECK_THROWS_AS(variant_family("XGB"), ConfigError);
    auto grid = variant_grid("SVR-TAH", {"a", "b"});
    for (const auto& c : grid.configs) CHECK(c.get_str("kernel") == "tah");
}
