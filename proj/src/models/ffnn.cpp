#include "tardy/models/ffnn.hpp"

#include <algorithm>
#include <cmath>

#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"

namespace tardy {

namespace ffnn {

namespace {

/// Activations per layer for one sample; out.back() has a single entry, the
/// linear output.
void forward_pass(const Net& net, std::span<const double> x,
                  std::vector<std::vector<double>>& acts) {
    acts.resize(net.weights.size());
    std::span<const double> in = x;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Matrix& w = net.weights[l];
        acts[l].assign(w.rows, 0.0);
        for (std::size_t o = 0; o < w.rows; ++o) {
            double v = net.biases[l][o];
            for (std::size_t i = 0; i < w.cols; ++i) v += w.at(o, i) * in[i];
            acts[l][o] = l + 1 < net.weights.size() ? std::tanh(v) : v;
        }
        in = acts[l];
    }
}

/// Backprop for one sample given its activations; accumulates dLoss/dparams
/// (squared error err^2, so the output delta is 2*err).
void backward_pass(const Net& net, std::span<const double> x,
                   const std::vector<std::vector<double>>& acts, double err,
                   std::vector<Matrix>& grad_w,
                   std::vector<std::vector<double>>& grad_b) {
    const std::size_t layers = net.weights.size();
    std::vector<double> delta{2.0 * err};
    for (std::size_t l = layers; l-- > 0;) {
        std::span<const double> input = l == 0 ? x : std::span<const double>(acts[l - 1]);
        const Matrix& w = net.weights[l];
        for (std::size_t o = 0; o < w.rows; ++o) {
            grad_b[l][o] += delta[o];
            for (std::size_t i = 0; i < w.cols; ++i)
                grad_w[l].at(o, i) += delta[o] * input[i];
        }
        if (l == 0) break;
        std::vector<double> prev(w.cols, 0.0);
        for (std::size_t i = 0; i < w.cols; ++i) {
            for (std::size_t o = 0; o < w.rows; ++o)
                prev[i] += w.at(o, i) * delta[o];
            double a = acts[l - 1][i];  // tanh' = 1 - tanh^2
            prev[i] *= 1.0 - a * a;
        }
        delta = std::move(prev);
    }
}

}  // namespace

double Net::forward(std::span<const double> x) const {
    std::vector<std::vector<double>> acts;
    forward_pass(*this, x, acts);
    return acts.back()[0];
}

double Net::mse_and_gradient(const Matrix& X, const std::vector<double>& y,
                             std::vector<double>& grad) const {
    std::vector<Matrix> grad_w;
    std::vector<std::vector<double>> grad_b;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        grad_w.emplace_back(weights[l].rows, weights[l].cols, 0.0);
        grad_b.emplace_back(biases[l].size(), 0.0);
    }
    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    for (std::size_t i = 0; i < X.rows; ++i) {
        forward_pass(*this, X.row(i), acts);
        double err = acts.back()[0] - y[i];
        loss += err * err;
        backward_pass(*this, X.row(i), acts, err, grad_w, grad_b);
    }
    const double nd = static_cast<double>(X.rows);
    grad.clear();
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (double v : grad_w[l].values) grad.push_back(v / nd);
        for (double v : grad_b[l]) grad.push_back(v / nd);
    }
    return loss / nd;
}

std::vector<double> Net::flatten() const {
    std::vector<double> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.insert(out.end(), weights[l].values.begin(), weights[l].values.end());
        out.insert(out.end(), biases[l].begin(), biases[l].end());
    }
    return out;
}

void Net::unflatten(std::span<const double> params) {
    std::size_t p = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (auto& v : weights[l].values) v = params[p++];
        for (auto& v : biases[l]) v = params[p++];
    }
}

Net make_net(std::size_t n_inputs, std::size_t hidden_layers,
             std::size_t nodes_per_layer, std::uint64_t seed) {
    Net net;
    Rng rng(derive_seed(seed, "init"));
    std::size_t in = n_inputs;
    for (std::size_t l = 0; l < hidden_layers + 1; ++l) {
        std::size_t out = l < hidden_layers ? nodes_per_layer : 1;
        Matrix w(out, in);
        double r = 1.0 / std::sqrt(static_cast<double>(in));
        for (auto& v : w.values) v = rng.uniform(-r, r);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(out, 0.0);
        in = out;
    }
    return net;
}

}  // namespace ffnn

std::unique_ptr<FfnnModel> FfnnModel::fit(const HyperConfig& config, const Matrix& X,
                                          const std::vector<double>& y,
                                          std::uint64_t seed, double y_max) {
    const auto hidden_layers =
        static_cast<std::size_t>(config.get_num("hidden_layers"));
    const auto nodes = static_cast<std::size_t>(config.get_num("nodes_per_layer"));
    const double learning_rate = config.get_num("learning_rate");
    // large fixed budget by default; the stopping rule is the checkpoint,
    // not an early abort
    const auto max_epochs = static_cast<std::size_t>(config.get_num("max_epochs", 5000));
    if (hidden_layers < 1) throw ConfigError("FFNN: hidden_layers must be >= 1");
    if (nodes < 1) throw ConfigError("FFNN: nodes_per_layer must be >= 1");

    const std::size_t n = X.rows;
    Rng rng(derive_seed(seed, "ffnn"));
    auto perm = rng.permutation(n);
    auto n_fit = std::max<std::size_t>(1, (3 * n) / 4);
    if (n_fit == n && n > 1) n_fit = n - 1;
    std::vector<std::size_t> fit_rows(perm.begin(), perm.begin() + static_cast<long>(n_fit));
    std::vector<std::size_t> val_rows(perm.begin() + static_cast<long>(n_fit), perm.end());
    if (val_rows.empty()) val_rows = fit_rows;

    Matrix x_fit = X.take_rows(fit_rows);
    auto y_fit = take_values(y, fit_rows);
    Matrix x_val = X.take_rows(val_rows);
    auto y_val = take_values(y, val_rows);

    bool zero_init = config.get_num("zero_init", 0.0) != 0.0;
    ffnn::Net net = ffnn::make_net(X.cols, hidden_layers, nodes, seed);
    if (zero_init)
        for (auto& w : net.weights) std::fill(w.values.begin(), w.values.end(), 0.0);

    auto model = std::make_unique<FfnnModel>();
    model->config_ = config;
    model->seed_ = seed;

    auto val_g = [&](const ffnn::Net& candidate) {
        std::vector<double> pred(x_val.rows);
        for (std::size_t i = 0; i < x_val.rows; ++i)
            pred[i] = candidate.forward(x_val.row(i));
        return evaluate(pred, y_val, y_max).g;
    };

    double best_g = val_g(net);
    model->trajectory_.push_back(best_g);
    model->net_ = net;

    std::vector<std::size_t> sgd_order(x_fit.rows);
    for (std::size_t i = 0; i < sgd_order.size(); ++i) sgd_order[i] = i;
    std::vector<std::vector<double>> acts;
    std::vector<Matrix> grad_w;
    std::vector<std::vector<double>> grad_b;

    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        rng.shuffle(sgd_order);
        double epoch_loss = 0.0;
        for (std::size_t s : sgd_order) {
            ffnn::forward_pass(net, x_fit.row(s), acts);
            double err = acts.back()[0] - y_fit[s];
            epoch_loss += err * err;

            grad_w.clear();
            grad_b.clear();
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                grad_w.emplace_back(net.weights[l].rows, net.weights[l].cols, 0.0);
                grad_b.emplace_back(net.biases[l].size(), 0.0);
            }
            ffnn::backward_pass(net, x_fit.row(s), acts, err, grad_w, grad_b);
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                for (std::size_t t = 0; t < net.weights[l].values.size(); ++t)
                    net.weights[l].values[t] -= learning_rate * grad_w[l].values[t];
                for (std::size_t t = 0; t < net.biases[l].size(); ++t)
                    net.biases[l][t] -= learning_rate * grad_b[l][t];
            }
        }
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("FFNN: non-finite loss at epoch " +
                                  std::to_string(epoch));
        double g = val_g(net);
        model->trajectory_.push_back(g);
        if (g > best_g) {
            best_g = g;
            model->net_ = net;
        }
    }
    return model;
}

std::vector<double> FfnnModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = net_.forward(X.row(i));
    check_finite(out);
    return out;
}

nlohmann::json FfnnModel::to_json() const {
    nlohmann::json j;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net_.weights.size(); ++l)
        layers.push_back({{"rows", net_.weights[l].rows},
                          {"cols", net_.weights[l].cols},
                          {"weights", net_.weights[l].values},
                          {"biases", net_.biases[l]}});
    j["layers"] = layers;
    return j;
}

std::unique_ptr<FfnnModel> FfnnModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<FfnnModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    for (const auto& layer : j.at("layers")) {
        Matrix w(layer.at("rows").get<std::size_t>(), layer.at("cols").get<std::size_t>());
        w.values = layer.at("weights").get<std::vector<double>>();
        m->net_.weights.push_back(std::move(w));
        m->net_.biases.push_back(layer.at("biases").get<std::vector<double>>());
    }
    return m;
}

}  // namespace tardy
