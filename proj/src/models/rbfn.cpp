#include "tardy/models/rbfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tardy/clustering.hpp"
#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"

namespace tardy {

namespace rbfn {

Matrix activations(const Matrix& X, const Matrix& centers, double sigma) {
    Matrix phi(X.rows, centers.rows);
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t c = 0; c < centers.rows; ++c)
            phi.at(i, c) = std::exp(-squared_distance(X.row(i), centers.row(c)) / denom);
    return phi;
}

double mse_and_gradient(const Matrix& phi, const std::vector<double>& y,
                        const std::vector<double>& weights, double bias,
                        std::vector<double>& grad_w, double& grad_b) {
    const std::size_t n = phi.rows;
    grad_w.assign(weights.size(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = bias;
        for (std::size_t c = 0; c < weights.size(); ++c)
            pred += weights[c] * phi.at(i, c);
        double err = pred - y[i];
        loss += err * err;
        for (std::size_t c = 0; c < weights.size(); ++c)
            grad_w[c] += 2.0 * err * phi.at(i, c);
        grad_b += 2.0 * err;
    }
    const double nd = static_cast<double>(n);
    for (auto& g : grad_w) g /= nd;
    grad_b /= nd;
    return loss / nd;
}

}  // namespace rbfn

std::unique_ptr<RbfnModel> RbfnModel::fit(const HyperConfig& config, const Matrix& X,
                                          const std::vector<double>& y,
                                          std::uint64_t seed, double y_max) {
    const double learning_rate = config.get_num("learning_rate");
    const double sigma = config.get_num("gaussian_width");
    const auto max_epochs = static_cast<std::size_t>(config.get_num("max_epochs", 500));
    if (sigma <= 0.0) throw ConfigError("RBFN: gaussian_width must be positive");
    if (learning_rate < 0.0) throw ConfigError("RBFN: learning_rate must be >= 0");

    const std::size_t n = X.rows;
    Rng rng(derive_seed(seed, "rbfn"));
    auto perm = rng.permutation(n);
    auto n_fit = std::max<std::size_t>(1, (3 * n) / 4);
    if (n_fit == n && n > 1) n_fit = n - 1;
    std::vector<std::size_t> fit_rows(perm.begin(), perm.begin() + static_cast<long>(n_fit));
    std::vector<std::size_t> val_rows(perm.begin() + static_cast<long>(n_fit), perm.end());
    if (val_rows.empty()) val_rows = fit_rows;  // degenerate tiny input

    Matrix x_fit = X.take_rows(fit_rows);
    auto y_fit = take_values(y, fit_rows);
    Matrix x_val = X.take_rows(val_rows);
    auto y_val = take_values(y, val_rows);

    // hidden nodes = silhouette-selected cluster centers over the fit rows
    std::size_t k_max = std::min<std::size_t>(
        25, static_cast<std::size_t>(std::sqrt(static_cast<double>(x_fit.rows))));
    k_max = std::max<std::size_t>(2, std::min(k_max, x_fit.rows));
    auto [k, clustering] = select_cluster_count(x_fit, 2, k_max,
                                                derive_seed(seed, "centers"),
                                                /*swap_iters=*/20);

    auto model = std::make_unique<RbfnModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->centers_ = clustering.centers;
    model->sigma_ = sigma;
    model->weights_.assign(k, 0.0);
    model->bias_ = vec_mean(y_fit);

    Matrix phi_fit = rbfn::activations(x_fit, model->centers_, sigma);
    Matrix phi_val = rbfn::activations(x_val, model->centers_, sigma);

    std::vector<double> w = model->weights_;
    double b = model->bias_;
    auto val_g = [&](const std::vector<double>& weights, double bias) {
        std::vector<double> pred(x_val.rows, bias);
        for (std::size_t i = 0; i < x_val.rows; ++i)
            for (std::size_t c = 0; c < weights.size(); ++c)
                pred[i] += weights[c] * phi_val.at(i, c);
        auto r = evaluate(pred, y_val, y_max);
        return r.g;
    };

    double best_g = val_g(w, b);
    model->trajectory_.push_back(best_g);
    model->weights_ = w;
    model->bias_ = b;

    std::vector<double> grad_w;
    double grad_b = 0.0;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        double loss = rbfn::mse_and_gradient(phi_fit, y_fit, w, b, grad_w, grad_b);
        if (!std::isfinite(loss))
            throw DivergenceError("RBFN: non-finite loss at epoch " +
                                  std::to_string(epoch));
        for (std::size_t c = 0; c < w.size(); ++c) w[c] -= learning_rate * grad_w[c];
        b -= learning_rate * grad_b;

        double g = val_g(w, b);
        model->trajectory_.push_back(g);
        if (g > best_g) {  // keep the weights of each new validation maximum
            best_g = g;
            model->weights_ = w;
            model->bias_ = b;
        }
    }
    return model;
}

std::vector<double> RbfnModel::predict(const Matrix& X) const {
    check_width(X);
    Matrix phi = rbfn::activations(X, centers_, sigma_);
    std::vector<double> out(X.rows, bias_);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t c = 0; c < weights_.size(); ++c)
            out[i] += weights_[c] * phi.at(i, c);
    check_finite(out);
    return out;
}

nlohmann::json RbfnModel::to_json() const {
    nlohmann::json j;
    j["n_features"] = centers_.cols;
    j["n_centers"] = centers_.rows;
    j["centers"] = centers_.values;
    j["sigma"] = sigma_;
    j["weights"] = weights_;
    j["bias"] = bias_;
    return j;
}

std::unique_ptr<RbfnModel> RbfnModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<RbfnModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->centers_ = Matrix(j.at("n_centers").get<std::size_t>(),
                         j.at("n_features").get<std::size_t>());
    m->centers_.values = j.at("centers").get<std::vector<double>>();
    m->sigma_ = j.at("sigma").get<double>();
    m->weights_ = j.at("weights").get<std::vector<double>>();
    m->bias_ = j.at("bias").get<double>();
    return m;
}

}  // namespace tardy
