#include "tardy/models/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tardy/rng.hpp"

namespace tardy {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Depth-limited CART-style regression tree on (rows, targets): exhaustive
/// variance-reduction splits, leaves predict the mean target.
void grow_cart(const Matrix& X, const std::vector<double>& target,
               std::vector<std::size_t> root_rows, std::size_t max_depth,
               std::size_t min_samples_split, std::vector<RtModel::Node>& nodes,
               std::vector<double>& importance) {
    struct Item {
        std::size_t node;
        std::size_t depth;
        std::vector<std::size_t> rows;
    };
    std::vector<Item> stack;
    nodes.emplace_back();
    stack.push_back({0, 0, std::move(root_rows)});

    std::vector<std::size_t> order;
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        auto& rows = item.rows;

        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r : rows) {
            sum += target[r];
            sum_sq += target[r] * target[r];
        }
        const double nd = static_cast<double>(rows.size());
        nodes[item.node].value = sum / nd;
        const double node_sse = sum_sq - sum * sum / nd;

        if (item.depth >= max_depth || rows.size() < min_samples_split ||
            node_sse <= 0.0)
            continue;

        double best_decrease = 0.0;
        std::size_t best_feature = 0;
        double best_value = 0.0;
        bool found = false;
        for (std::size_t j = 0; j < X.cols; ++j) {
            order = rows;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return X.at(a, j) < X.at(b, j);
            });
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                double v = target[order[i]];
                left_sum += v;
                left_sq += v * v;
                if (X.at(order[i], j) == X.at(order[i + 1], j)) continue;
                double nl = static_cast<double>(i + 1);
                double nr = nd - nl;
                double right_sum = sum - left_sum, right_sq = sum_sq - left_sq;
                double decrease = node_sse - (left_sq - left_sum * left_sum / nl) -
                                  (right_sq - right_sum * right_sum / nr);
                if (decrease > best_decrease) {
                    best_decrease = decrease;
                    best_feature = j;
                    best_value = 0.5 * (X.at(order[i], j) + X.at(order[i + 1], j));
                    found = true;
                }
            }
        }
        if (!found) continue;

        importance[best_feature] += best_decrease;
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            if (X.at(r, best_feature) <= best_value)
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
        node.split = best_value;
        node.left = left_idx;
        node.right = right_idx;
        stack.push_back({left_idx, item.depth + 1, std::move(left)});
        stack.push_back({right_idx, item.depth + 1, std::move(right)});
    }
}

}  // namespace

std::unique_ptr<GbmModel> GbmModel::fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed) {
    auto n_trees = static_cast<std::size_t>(config.get_num("n_trees"));
    auto max_depth = static_cast<std::size_t>(config.get_num("max_depth", 3));
    auto min_samples_split =
        static_cast<std::size_t>(config.get_num("min_samples_split", 2));
    double learning_rate = config.get_num("learning_rate");
    double subsample = config.get_num("subsample", 1.0);
    std::string loss = config.get_str("loss", "squared");
    if (learning_rate < 0.0 || learning_rate > 1.0)
        throw ConfigError("GBM: learning_rate must be in [0, 1]");
    if (subsample <= 0.0 || subsample > 1.0)
        throw ConfigError("GBM: subsample must be in (0, 1]");
    if (loss != "squared" && loss != "absolute")
        throw ConfigError("GBM: unknown loss '" + loss + "'");
    const bool absolute = loss == "absolute";

    auto model = std::make_unique<GbmModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->n_features_ = X.cols;
    model->learning_rate_ = learning_rate;
    model->importance_.assign(X.cols, 0.0);
    model->f0_ = absolute ? median_of(y) : vec_mean(y);

    const std::size_t n = X.rows;
    std::vector<double> f(n, model->f0_);
    std::vector<double> gradient(n);
    auto n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::round(subsample * static_cast<double>(n))));

    for (std::size_t m = 0; m < n_trees; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - f[i];
            gradient[i] = absolute ? (r > 0.0) - (r < 0.0) : r;
        }
        Rng rng(derive_seed(seed, "stage", m));
        std::vector<std::size_t> rows;
        if (n_sub < n) {
            rows = rng.sample_without_replacement(n, n_sub);
            std::sort(rows.begin(), rows.end());
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        }
        std::vector<RtModel::Node> nodes;
        grow_cart(X, gradient, std::move(rows), max_depth, min_samples_split, nodes,
                  model->importance_);
        for (std::size_t i = 0; i < n; ++i)
            f[i] += learning_rate * detail::rt_walk(nodes, X.row(i));
        model->stages_.push_back(std::move(nodes));

        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) mse += (y[i] - f[i]) * (y[i] - f[i]);
        mse /= static_cast<double>(n);
        if (!std::isfinite(mse))
            throw DivergenceError("GBM: non-finite training loss at stage " +
                                  std::to_string(m));
        model->train_mse_.push_back(mse);
    }
    return model;
}

std::vector<double> GbmModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows, f0_);
    for (const auto& stage : stages_)
        for (std::size_t i = 0; i < X.rows; ++i)
            out[i] += learning_rate_ * detail::rt_walk(stage, X.row(i));
    check_finite(out);
    return out;
}

std::vector<double> GbmModel::predict_stage(std::size_t m, const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
        out[i] = detail::rt_walk(stages_[m], X.row(i));
    return out;
}

nlohmann::json GbmModel::to_json() const {
    nlohmann::json j;
    j["n_features"] = n_features_;
    j["f0"] = f0_;
    j["learning_rate"] = learning_rate_;
    j["importance"] = importance_;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : stages_) stages.push_back(detail::rt_nodes_to_json(s));
    j["stages"] = stages;
    return j;
}

std::unique_ptr<GbmModel> GbmModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<GbmModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->n_features_ = j.at("n_features").get<std::size_t>();
    m->f0_ = j.at("f0").get<double>();
    m->learning_rate_ = j.at("learning_rate").get<double>();
    m->importance_ = j.at("importance").get<std::vector<double>>();
    for (const auto& s : j.at("stages"))
        m->stages_.push_back(detail::rt_nodes_from_json(s));
    return m;
}

}  // namespace tardy
