#pragma once

#include "tardy/model.hpp"

namespace tardy {

namespace rbfn {
/// Hidden-layer activations exp(-||x - c||^2 / (2 sigma^2)), one column per
/// center.
Matrix activations(const Matrix& X, const Matrix& centers, double sigma);

/// Mean squared error of the linear output layer and its analytic gradient
/// with respect to (weights, bias). Exposed for the finite-difference check.
double mse_and_gradient(const Matrix& phi, const std::vector<double>& y,
                        const std::vector<double>& weights, double bias,
                        std::vector<double>& grad_w, double& grad_b);
}  // namespace rbfn

/// Radial basis function network: Gaussian hidden units on cluster centers
/// chosen by silhouette-selected random-swap k-means over the fit rows, and
/// a linear output layer trained by gradient descent. Weights checkpoint on
/// each new best validation G over an internal 75/25 split.
class RbfnModel final : public Model {
public:
    static std::unique_ptr<RbfnModel> fit(const HyperConfig& config, const Matrix& X,
                                          const std::vector<double>& y,
                                          std::uint64_t seed, double y_max);

    Family family() const override { return Family::RBFN; }
    std::size_t n_features() const override { return centers_.cols; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<RbfnModel> from_json(const nlohmann::json& j);

    std::size_t n_centers() const { return centers_.rows; }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }

private:
    Matrix centers_;
    double sigma_ = 1.0;
    std::vector<double> weights_;
    double bias_ = 0.0;
};

}  // namespace tardy
