#pragma once

#include "tardy/model.hpp"
#include "tardy/models/tree.hpp"

namespace tardy {

/// Random forest of extremely randomized regression trees: each tree is
/// grown on a 63.21% subsample drawn without replacement, and each node
/// picks the best of a few uniformly drawn random cut values per candidate
/// feature (highest variance reduction wins). Prediction is the plain mean
/// over trees.
class RfModel final : public Model, public ImportanceProvider {
public:
    static std::unique_ptr<RfModel> fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed);

    Family family() const override { return Family::RF; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<RfModel> from_json(const nlohmann::json& j);

    std::vector<double> raw_importance() const override { return importance_; }

    std::size_t n_trees() const { return trees_.size(); }
    /// Per-tree prediction, for the mean-of-trees identity check.
    std::vector<double> predict_tree(std::size_t t, const Matrix& X) const;

private:
    std::size_t n_features_ = 0;
    std::vector<std::vector<RtModel::Node>> trees_;
    std::vector<double> importance_;  // summed impurity decrease per feature
};

}  // namespace tardy
