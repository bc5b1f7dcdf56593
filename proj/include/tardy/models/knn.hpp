#pragma once

#include "tardy/model.hpp"

namespace tardy {

/// Lazy k-nearest-neighbour regressor with uniform or inverse-distance
/// weighting. An exact-duplicate query under inverse weighting returns the
/// duplicate's target.
class KnnModel final : public Model {
public:
    static std::unique_ptr<KnnModel> fit(const HyperConfig& config, const Matrix& X,
                                         const std::vector<double>& y,
                                         std::uint64_t seed);

    Family family() const override { return Family::KNN; }
    std::size_t n_features() const override { return train_.cols; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<KnnModel> from_json(const nlohmann::json& j);

private:
    std::size_t k_ = 1;
    bool inverse_distance_ = false;
    Matrix train_;
    std::vector<double> targets_;
};

}  // namespace tardy
