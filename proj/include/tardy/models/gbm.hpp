#pragma once

#include "tardy/model.hpp"
#include "tardy/models/tree.hpp"

namespace tardy {

/// Stochastic gradient boosting with depth-limited variance-split trees
/// fitted stage-wise to negative gradients of a squared or absolute loss.
/// Prediction telescopes exactly: F0 + learning_rate * sum of stage outputs.
class GbmModel final : public Model, public ImportanceProvider {
public:
    static std::unique_ptr<GbmModel> fit(const HyperConfig& config, const Matrix& X,
                                         const std::vector<double>& y,
                                         std::uint64_t seed);

    Family family() const override { return Family::GBM; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<GbmModel> from_json(const nlohmann::json& j);

    std::vector<double> raw_importance() const override { return importance_; }

    double f0() const { return f0_; }
    double learning_rate() const { return learning_rate_; }
    std::size_t n_stages() const { return stages_.size(); }
    std::vector<double> predict_stage(std::size_t m, const Matrix& X) const;
    /// Training MSE after each stage (subsample=1 makes this non-increasing
    /// under squared loss).
    const std::vector<double>& train_mse_trace() const { return train_mse_; }

private:
    std::size_t n_features_ = 0;
    double f0_ = 0.0;
    double learning_rate_ = 0.1;
    std::vector<std::vector<RtModel::Node>> stages_;
    std::vector<double> importance_;
    std::vector<double> train_mse_;
};

}  // namespace tardy
