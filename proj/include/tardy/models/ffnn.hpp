#pragma once

#include "tardy/model.hpp"

namespace tardy {

namespace ffnn {

/// Plain fully connected net: tanh hidden layers, linear output. Parameters
/// are stored per layer as weight matrices (out x in) and bias vectors.
struct Net {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t n_inputs() const { return weights.front().cols; }
    double forward(std::span<const double> x) const;

    /// Mean squared error over (X, y) and its gradient in parameter order
    /// (layer 0 weights row-major, layer 0 biases, layer 1 ...). Exposed for
    /// the finite-difference check.
    double mse_and_gradient(const Matrix& X, const std::vector<double>& y,
                            std::vector<double>& grad) const;

    std::vector<double> flatten() const;
    void unflatten(std::span<const double> params);
};

Net make_net(std::size_t n_inputs, std::size_t hidden_layers,
             std::size_t nodes_per_layer, std::uint64_t seed);

}  // namespace ffnn

/// Feed-forward network trained by per-sample stochastic gradient descent
/// for a fixed epoch budget, with the same internal 75/25 split and
/// validation-G checkpointing as the RBFN.
class FfnnModel final : public Model {
public:
    static std::unique_ptr<FfnnModel> fit(const HyperConfig& config, const Matrix& X,
                                          const std::vector<double>& y,
                                          std::uint64_t seed, double y_max);

    Family family() const override { return Family::FFNN; }
    std::size_t n_features() const override { return net_.n_inputs(); }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<FfnnModel> from_json(const nlohmann::json& j);

    const ffnn::Net& net() const { return net_; }

private:
    ffnn::Net net_;
};

}  // namespace tardy
