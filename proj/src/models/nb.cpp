#include "tardy/models/nb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tardy {

namespace {
constexpr double kVarianceFloor = 1e-6;
}

std::unique_ptr<NbModel> NbModel::fit(const HyperConfig& config, const Matrix& X,
                                      const std::vector<double>& y,
                                      std::uint64_t seed) {
    auto n_bins = static_cast<std::size_t>(config.get_num("n_bins"));
    if (n_bins < 2) throw ConfigError("NB: n_bins must be >= 2");
    if (y.size() <= n_bins) throw Error("NB: need more rows than bins");

    auto model = std::make_unique<NbModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->n_features_ = X.cols;
    model->y_lo_ = *std::min_element(y.begin(), y.end());
    model->y_hi_ = *std::max_element(y.begin(), y.end());

    if (model->y_lo_ == model->y_hi_) {
        // constant target: single bin predicting that constant
        model->midpoints_ = {model->y_lo_};
        model->log_prior_ = {0.0};
        model->counts_ = {y.size()};
        model->mean_ = Matrix(1, X.cols, 0.0);
        model->variance_ = Matrix(1, X.cols, kVarianceFloor);
        return model;
    }

    const double width = (model->y_hi_ - model->y_lo_) / static_cast<double>(n_bins);
    auto bin_of = [&](double v) {
        auto b = static_cast<std::size_t>((v - model->y_lo_) / width);
        return std::min(b, n_bins - 1);
    };

    model->midpoints_.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b)
        model->midpoints_[b] = model->y_lo_ + width * (static_cast<double>(b) + 0.5);

    model->counts_.assign(n_bins, 0);
    model->mean_ = Matrix(n_bins, X.cols, 0.0);
    model->variance_ = Matrix(n_bins, X.cols, 0.0);

    std::vector<std::size_t> bins(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        bins[i] = bin_of(y[i]);
        ++model->counts_[bins[i]];
        for (std::size_t j = 0; j < X.cols; ++j)
            model->mean_.at(bins[i], j) += X.at(i, j);
    }
    for (std::size_t b = 0; b < n_bins; ++b)
        if (model->counts_[b] > 0)
            for (std::size_t j = 0; j < X.cols; ++j)
                model->mean_.at(b, j) /= static_cast<double>(model->counts_[b]);
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < X.cols; ++j) {
            double d = X.at(i, j) - model->mean_.at(bins[i], j);
            model->variance_.at(bins[i], j) += d * d;
        }
    model->log_prior_.assign(n_bins, -std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (model->counts_[b] == 0) continue;
        model->log_prior_[b] = std::log(static_cast<double>(model->counts_[b]) /
                                        static_cast<double>(y.size()));
        for (std::size_t j = 0; j < X.cols; ++j)
            model->variance_.at(b, j) = std::max(
                model->variance_.at(b, j) / static_cast<double>(model->counts_[b]),
                kVarianceFloor);
    }
    return model;
}

std::vector<double> NbModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_b = 0;
        for (std::size_t b = 0; b < midpoints_.size(); ++b) {
            if (counts_[b] == 0) continue;
            double lp = log_prior_[b];
            for (std::size_t j = 0; j < n_features_; ++j) {
                double var = variance_.at(b, j);
                double d = X.at(i, j) - mean_.at(b, j);
                lp += -0.5 * std::log(2.0 * std::numbers::pi * var) -
                      d * d / (2.0 * var);
            }
            if (lp > best) {
                best = lp;
                best_b = b;
            }
        }
        out[i] = midpoints_[best_b];
    }
    check_finite(out);
    return out;
}

nlohmann::json NbModel::to_json() const {
    nlohmann::json j;
    j["y_lo"] = y_lo_;
    j["y_hi"] = y_hi_;
    j["n_features"] = n_features_;
    j["midpoints"] = midpoints_;
    // empty bins carry -inf priors in memory but are skipped at predict;
    // store 0 so the container stays valid JSON
    auto priors = log_prior_;
    for (std::size_t b = 0; b < priors.size(); ++b)
        if (counts_[b] == 0) priors[b] = 0.0;
    j["log_prior"] = priors;
    j["counts"] = counts_;
    j["mean"] = mean_.values;
    j["variance"] = variance_.values;
    return j;
}

std::unique_ptr<NbModel> NbModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<NbModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->y_lo_ = j.at("y_lo").get<double>();
    m->y_hi_ = j.at("y_hi").get<double>();
    m->n_features_ = j.at("n_features").get<std::size_t>();
    m->midpoints_ = j.at("midpoints").get<std::vector<double>>();
    m->log_prior_ = j.at("log_prior").get<std::vector<double>>();
    m->counts_ = j.at("counts").get<std::vector<std::size_t>>();
    m->mean_ = Matrix(m->midpoints_.size(), m->n_features_);
    m->mean_.values = j.at("mean").get<std::vector<double>>();
    m->variance_ = Matrix(m->midpoints_.size(), m->n_features_);
    m->variance_.values = j.at("variance").get<std::vector<double>>();
    return m;
}

}  // namespace tardy
