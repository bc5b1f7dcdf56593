#include "tardy/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace tardy {

std::vector<double> midranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::optional<MaxstatSplit> max_sel_rank_split(std::span<const double> x,
                                               std::span<const double> y,
                                               double minprop, double alpha) {
    if (minprop <= 0.0 || minprop >= 0.5)
        throw ConfigError("max_sel_rank_split: minprop must be in (0, 0.5)");
    const std::size_t n = x.size();
    if (n != y.size()) throw Error("max_sel_rank_split: x/y length mismatch");
    if (n < 2) return std::nullopt;

    auto ranks = midranks(y);
    const double mean_rank = 0.5 * static_cast<double>(n + 1);
    double rank_ss = 0.0;
    for (double r : ranks) rank_ss += (r - mean_rank) * (r - mean_rank);
    if (rank_ss == 0.0) return std::nullopt;  // constant outcome

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    double best_z = -1.0;
    std::size_t best_pos = 0;
    std::size_t n_candidates = 0;
    double rank_prefix = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        rank_prefix += ranks[order[i]];
        if (x[order[i]] == x[order[i + 1]]) continue;  // not a cut point
        const double m = static_cast<double>(i + 1);
        const double frac = m / nd;
        if (frac < minprop - 1e-12 || frac > 1.0 - minprop + 1e-12) continue;
        ++n_candidates;
        const double expected = m * mean_rank;
        const double variance = m * (nd - m) / (nd * (nd - 1.0)) * rank_ss;
        const double z = std::abs(rank_prefix - expected) / std::sqrt(variance);
        if (z > best_z) {
            best_z = z;
            best_pos = i;
        }
    }
    if (n_candidates == 0) return std::nullopt;

    // two-sided normal tail, Bonferroni-corrected over the candidate count;
    // floored so alpha = 0 always means "never split"
    double p_single = std::max(std::erfc(best_z / std::numbers::sqrt2), 1e-300);
    double adjusted = std::min(1.0, p_single * static_cast<double>(n_candidates));
    if (adjusted > alpha) return std::nullopt;

    MaxstatSplit split;
    split.split_value = 0.5 * (x[order[best_pos]] + x[order[best_pos + 1]]);
    split.statistic = best_z;
    split.adjusted_p = adjusted;
    return split;
}

std::unique_ptr<RtModel> RtModel::fit(const HyperConfig& config, const Matrix& X,
                                      const std::vector<double>& y,
                                      std::uint64_t seed) {
    auto min_node_size = static_cast<std::size_t>(config.get_num("min_node_size"));
    double minprop = config.get_num("minprop", 0.1);
    double alpha = config.get_num("alpha", 0.5);
    if (min_node_size < 1) throw ConfigError("RT: min_node_size must be >= 1");

    auto model = std::make_unique<RtModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->n_features_ = X.cols;

    struct Item {
        std::size_t node;
        std::vector<std::size_t> rows;
    };
    std::vector<Item> stack;
    model->nodes_.emplace_back();
    {
        std::vector<std::size_t> all(X.rows);
        std::iota(all.begin(), all.end(), 0);
        stack.push_back({0, std::move(all)});
    }

    std::vector<double> xs, ys;
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        auto& rows = item.rows;

        double mean = 0.0;
        for (std::size_t r : rows) mean += y[r];
        mean /= static_cast<double>(rows.size());
        model->nodes_[item.node].value = mean;

        if (rows.size() <= min_node_size) continue;

        ys.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = y[rows[i]];

        bool found = false;
        double best_p = std::numeric_limits<double>::infinity();
        std::size_t best_feature = 0;
        double best_value = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) {
            xs.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) xs[i] = X.at(rows[i], j);
            auto split = max_sel_rank_split(xs, ys, minprop, alpha);
            if (split && split->adjusted_p < best_p) {
                best_p = split->adjusted_p;
                best_feature = j;
                best_value = split->split_value;
                found = true;
            }
        }
        if (!found) continue;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            if (X.at(r, best_feature) <= best_value)
                left.push_back(r);
            else
                right.push_back(r);
        }
        const std::size_t left_idx = model->nodes_.size();
        const std::size_t right_idx = left_idx + 1;
        model->nodes_.emplace_back();
        model->nodes_.emplace_back();
        auto& node = model->nodes_[item.node];  // re-acquired after growth
        node.leaf = false;
        node.feature = best_feature;
        node.split = best_value;
        node.left = left_idx;
        node.right = right_idx;
        stack.push_back({left_idx, std::move(left)});
        stack.push_back({right_idx, std::move(right)});
    }
    return model;
}

double RtModel::predict_row(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf)
        i = x[nodes_[i].feature] <= nodes_[i].split ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].value;
}

std::vector<double> RtModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
    check_finite(out);
    return out;
}

namespace {

nlohmann::json nodes_to_json(const std::vector<RtModel::Node>& nodes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes)
        arr.push_back({{"leaf", n.leaf},
                       {"value", n.value},
                       {"feature", n.feature},
                       {"split", n.split},
                       {"left", n.left},
                       {"right", n.right}});
    return arr;
}

std::vector<RtModel::Node> nodes_from_json(const nlohmann::json& arr) {
    std::vector<RtModel::Node> nodes;
    for (const auto& j : arr) {
        RtModel::Node n;
        n.leaf = j.at("leaf").get<bool>();
        n.value = j.at("value").get<double>();
        n.feature = j.at("feature").get<std::size_t>();
        n.split = j.at("split").get<double>();
        n.left = j.at("left").get<std::size_t>();
        n.right = j.at("right").get<std::size_t>();
        nodes.push_back(n);
    }
    return nodes;
}

}  // namespace

nlohmann::json RtModel::to_json() const {
    nlohmann::json j;
    j["n_features"] = n_features_;
    j["nodes"] = nodes_to_json(nodes_);
    return j;
}

std::unique_ptr<RtModel> RtModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<RtModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->n_features_ = j.at("n_features").get<std::size_t>();
    m->nodes_ = nodes_from_json(j.at("nodes"));
    return m;
}

// shared with the ensemble models
namespace detail {
nlohmann::json rt_nodes_to_json(const std::vector<RtModel::Node>& nodes) {
    return nodes_to_json(nodes);
}
std::vector<RtModel::Node> rt_nodes_from_json(const nlohmann::json& j) {
    return nodes_from_json(j);
}
double rt_walk(const std::vector<RtModel::Node>& nodes, std::span<const double> x) {
    std::size_t i = 0;
    while (!nodes[i].leaf)
        i = x[nodes[i].feature] <= nodes[i].split ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}
}  // namespace detail

}  // namespace tardy
