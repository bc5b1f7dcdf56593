#pragma once

#include <optional>

#include "tardy/model.hpp"

namespace tardy {

/// Split-point selection by maximally selected rank statistics: the
/// standardized linear rank statistic is maximized over candidate cuts in
/// the [minprop, 1-minprop] quantile band, with a normal-approximation
/// p-value Bonferroni-corrected over the number of candidates.
struct MaxstatSplit {
    double split_value = 0.0;
    double statistic = 0.0;   // max |Z|
    double adjusted_p = 1.0;
};

std::optional<MaxstatSplit> max_sel_rank_split(std::span<const double> x,
                                               std::span<const double> y,
                                               double minprop, double alpha);

/// Midranks of v (average rank for ties), 1-based.
std::vector<double> midranks(std::span<const double> v);

/// Regression tree grown by binary recursive partitioning with maxstat
/// splits; leaves predict the mean of their targets.
class RtModel final : public Model {
public:
    static std::unique_ptr<RtModel> fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed);

    Family family() const override { return Family::RT; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<RtModel> from_json(const nlohmann::json& j);

    struct Node {
        bool leaf = true;
        double value = 0.0;        // leaf mean
        std::size_t feature = 0;
        double split = 0.0;        // x <= split goes left
        std::size_t left = 0, right = 0;
    };
    const std::vector<Node>& nodes() const { return nodes_; }

private:
    double predict_row(std::span<const double> x) const;

    std::size_t n_features_ = 0;
    std::vector<Node> nodes_;
};

namespace detail {
nlohmann::json rt_nodes_to_json(const std::vector<RtModel::Node>& nodes);
std::vector<RtModel::Node> rt_nodes_from_json(const nlohmann::json& j);
double rt_walk(const std::vector<RtModel::Node>& nodes, std::span<const double> x);
}  // namespace detail

}  // namespace tardy
