#include "tardy/models/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tardy/rng.hpp"

namespace tardy {

namespace {

// expected unique fraction of a full bootstrap, applied here as a
// without-replacement subsample proportion
constexpr double kSubsampleFraction = 0.6321;

struct NodeStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double sse() const {
        return count == 0 ? 0.0 : sum_sq - sum * sum / static_cast<double>(count);
    }
    double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

void grow_tree(const Matrix& X, const std::vector<double>& y,
               std::vector<std::size_t> root_rows, std::size_t min_node_size,
               std::size_t n_split_vars, std::size_t n_random_cuts, Rng& rng,
               std::vector<RtModel::Node>& nodes, std::vector<double>& importance) {
    struct Item {
        std::size_t node;
        std::vector<std::size_t> rows;
    };
    std::vector<Item> stack;
    nodes.emplace_back();
    stack.push_back({0, std::move(root_rows)});

    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        auto& rows = item.rows;

        NodeStats stats;
        for (std::size_t r : rows) stats.add(y[r]);
        nodes[item.node].value = stats.mean();
        if (rows.size() <= min_node_size || stats.sse() <= 0.0) continue;

        auto candidates = rng.sample_without_replacement(X.cols, n_split_vars);
        double best_decrease = 0.0;
        std::size_t best_feature = 0;
        double best_cut = 0.0;
        bool found = false;
        for (std::size_t j : candidates) {
            double lo = X.at(rows[0], j), hi = lo;
            for (std::size_t r : rows) {
                lo = std::min(lo, X.at(r, j));
                hi = std::max(hi, X.at(r, j));
            }
            if (lo == hi) continue;
            for (std::size_t c = 0; c < n_random_cuts; ++c) {
                double cut = rng.uniform(lo, hi);
                NodeStats left, right;
                for (std::size_t r : rows)
                    (X.at(r, j) <= cut ? left : right).add(y[r]);
                if (left.count == 0 || right.count == 0) continue;
                double decrease = stats.sse() - left.sse() - right.sse();
                if (decrease > best_decrease) {
                    best_decrease = decrease;
                    best_feature = j;
                    best_cut = cut;
                    found = true;
                }
            }
        }
        if (!found) continue;

        importance[best_feature] += best_decrease;
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            if (X.at(r, best_feature) <= best_cut)
                left.push_back(r);
            else
                right.push_back(r);
        }
        const std::size_t left_idx = nodes.size();
        const std::size_t right_idx = left_idx + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        auto& node = nodes[item.node];  // re-acquired after growth
        node.leaf = false;
        node.feature = best_feature;
        node.split = best_cut;
        node.left = left_idx;
        node.right = right_idx;
        stack.push_back({left_idx, std::move(left)});
        stack.push_back({right_idx, std::move(right)});
    }
}

}  // namespace

std::unique_ptr<RfModel> RfModel::fit(const HyperConfig& config, const Matrix& X,
                                      const std::vector<double>& y,
                                      std::uint64_t seed) {
    auto n_trees = static_cast<std::size_t>(config.get_num("n_trees"));
    auto min_node_size = static_cast<std::size_t>(config.get_num("min_node_size"));
    auto n_split_vars = static_cast<std::size_t>(config.get_num("n_split_vars"));
    auto n_random_cuts = static_cast<std::size_t>(config.get_num("n_random_cuts", 1));
    if (n_trees < 1) throw ConfigError("RF: n_trees must be >= 1");
    if (n_split_vars < 1 || n_split_vars > X.cols)
        throw ConfigError("RF: n_split_vars must be in [1, n_features]");
    if (n_random_cuts < 1) throw ConfigError("RF: n_random_cuts must be >= 1");

    auto model = std::make_unique<RfModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->n_features_ = X.cols;
    model->importance_.assign(X.cols, 0.0);

    auto n_sub = static_cast<std::size_t>(
        std::ceil(kSubsampleFraction * static_cast<double>(X.rows)));
    n_sub = std::max<std::size_t>(1, std::min(n_sub, X.rows));

    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, "tree", t));
        auto rows = rng.sample_without_replacement(X.rows, n_sub);
        std::vector<RtModel::Node> nodes;
        grow_tree(X, y, std::move(rows), min_node_size, n_split_vars, n_random_cuts,
                  rng, nodes, model->importance_);
        model->trees_.push_back(std::move(nodes));
    }
    return model;
}

std::vector<double> RfModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows, 0.0);
    for (const auto& tree : trees_)
        for (std::size_t i = 0; i < X.rows; ++i)
            out[i] += detail::rt_walk(tree, X.row(i));
    for (auto& v : out) v /= static_cast<double>(trees_.size());
    check_finite(out);
    return out;
}

std::vector<double> RfModel::predict_tree(std::size_t t, const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
        out[i] = detail::rt_walk(trees_[t], X.row(i));
    return out;
}

nlohmann::json RfModel::to_json() const {
    nlohmann::json j;
    j["n_features"] = n_features_;
    j["importance"] = importance_;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(detail::rt_nodes_to_json(t));
    j["trees"] = trees;
    return j;
}

std::unique_ptr<RfModel> RfModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<RfModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->n_features_ = j.at("n_features").get<std::size_t>();
    m->importance_ = j.at("importance").get<std::vector<double>>();
    for (const auto& t : j.at("trees"))
        m->trees_.push_back(detail::rt_nodes_from_json(t));
    return m;
}

}  // namespace tardy
