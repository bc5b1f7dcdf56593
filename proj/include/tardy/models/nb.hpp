#pragma once

#include "tardy/model.hpp"

namespace tardy {

/// Naive Bayes read as a regressor: the target range is cut into
/// equal-width bins treated as classes, Gaussian class-conditional
/// likelihoods per feature, and the prediction is the midpoint of the
/// argmax-posterior bin.
class NbModel final : public Model {
public:
    static std::unique_ptr<NbModel> fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed);

    Family family() const override { return Family::NB; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<NbModel> from_json(const nlohmann::json& j);

    std::size_t n_bins() const { return midpoints_.size(); }
    const std::vector<double>& bin_midpoints() const { return midpoints_; }

private:
    std::size_t n_features_ = 0;
    double y_lo_ = 0.0, y_hi_ = 0.0;
    std::vector<double> midpoints_;     // per bin
    std::vector<double> log_prior_;     // per bin; empty bins excluded at predict
    std::vector<std::size_t> counts_;   // per bin
    Matrix mean_;                        // bins x features
    Matrix variance_;                    // bins x features, floored
};

}  // namespace tardy
