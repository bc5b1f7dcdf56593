#include "tardy/models/knn.hpp"

#include <algorithm>
#include <cmath>

namespace tardy {

std::unique_ptr<KnnModel> KnnModel::fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed) {
    auto k = static_cast<std::size_t>(config.get_num("k"));
    if (k < 1 || k > X.rows) throw Error("KNN: k must be in [1, n]");
    std::string weighting = config.get_str("weighting", "uniform");
    if (weighting != "uniform" && weighting != "inverse_distance")
        throw ConfigError("KNN: unknown weighting '" + weighting + "'");

    auto model = std::make_unique<KnnModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->k_ = k;
    model->inverse_distance_ = weighting == "inverse_distance";
    model->train_ = X;
    model->targets_ = y;
    return model;
}

std::vector<double> KnnModel::predict(const Matrix& X) const {
    check_width(X);
    const std::size_t n = train_.rows;
    std::vector<double> out(X.rows);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t q = 0; q < X.rows; ++q) {
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {std::sqrt(squared_distance(X.row(q), train_.row(i))), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k_),
                          dist.end());  // ties break on the lower index

        if (inverse_distance_ && dist[0].first == 0.0) {
            // exact duplicates: their targets decide outright
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < k_ && dist[i].first == 0.0; ++i) {
                sum += targets_[dist[i].second];
                ++cnt;
            }
            out[q] = sum / static_cast<double>(cnt);
            continue;
        }
        if (inverse_distance_) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < k_; ++i) {
                double w = 1.0 / dist[i].first;
                num += w * targets_[dist[i].second];
                den += w;
            }
            out[q] = num / den;
        } else {
            double sum = 0.0;
            for (std::size_t i = 0; i < k_; ++i) sum += targets_[dist[i].second];
            out[q] = sum / static_cast<double>(k_);
        }
    }
    check_finite(out);
    return out;
}

nlohmann::json KnnModel::to_json() const {
    nlohmann::json j;
    j["k"] = k_;
    j["inverse_distance"] = inverse_distance_;
    j["rows"] = train_.rows;
    j["cols"] = train_.cols;
    j["train"] = train_.values;
    j["targets"] = targets_;
    return j;
}

std::unique_ptr<KnnModel> KnnModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<KnnModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->k_ = j.at("k").get<std::size_t>();
    m->inverse_distance_ = j.at("inverse_distance").get<bool>();
    m->train_ = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m->train_.values = j.at("train").get<std::vector<double>>();
    m->targets_ = j.at("targets").get<std::vector<double>>();
    return m;
}

}  // namespace tardy
