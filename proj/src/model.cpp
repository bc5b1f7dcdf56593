#include "tardy/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tardy/models/ffnn.hpp"
#include "tardy/models/forest.hpp"
#include "tardy/models/gbm.hpp"
#include "tardy/models/knn.hpp"
#include "tardy/models/mlm.hpp"
#include "tardy/models/nb.hpp"
#include "tardy/models/rbfn.hpp"
#include "tardy/models/svr.hpp"
#include "tardy/models/tree.hpp"

namespace tardy {

const char* family_name(Family f) {
    switch (f) {
        case Family::MLM_RI: return "MLM-RI";
        case Family::MLM_RS: return "MLM-RS";
        case Family::NB: return "NB";
        case Family::KNN: return "KNN";
        case Family::RBFN: return "RBFN";
        case Family::FFNN: return "FFNN";
        case Family::RT: return "RT";
        case Family::RF: return "RF";
        case Family::GBM: return "GBM";
        case Family::SVR: return "SVR";
    }
    throw Error("unknown family");
}

Family family_from_name(const std::string& s) {
    for (Family f : {Family::MLM_RI, Family::MLM_RS, Family::NB, Family::KNN,
                     Family::RBFN, Family::FFNN, Family::RT, Family::RF, Family::GBM,
                     Family::SVR})
        if (s == family_name(f)) return f;
    throw ConfigError("unknown model family: " + s);
}

double HyperConfig::get_num(const std::string& key) const {
    auto it = num.find(key);
    if (it == num.end())
        throw ConfigError(std::string(family_name(family)) +
                          ": missing hyperparameter '" + key + "'");
    return it->second;
}

double HyperConfig::get_num(const std::string& key, double fallback) const {
    auto it = num.find(key);
    return it == num.end() ? fallback : it->second;
}

std::string HyperConfig::get_str(const std::string& key,
                                 const std::string& fallback) const {
    auto it = str.find(key);
    return it == str.end() ? fallback : it->second;
}

nlohmann::json HyperConfig::to_json() const {
    nlohmann::json j;
    j["family"] = family_name(family);
    j["num"] = num;
    j["str"] = str;
    return j;
}

HyperConfig HyperConfig::from_json(const nlohmann::json& j) {
    HyperConfig c;
    c.family = family_from_name(j.at("family").get<std::string>());
    if (j.contains("num")) c.num = j.at("num").get<std::map<std::string, double>>();
    if (j.contains("str"))
        c.str = j.at("str").get<std::map<std::string, std::string>>();
    return c;
}

std::string HyperConfig::describe() const {
    std::ostringstream out;
    out << family_name(family);
    for (const auto& [k, v] : str) out << ' ' << k << '=' << v;
    for (const auto& [k, v] : num) out << ' ' << k << '=' << v;
    return out.str();
}

void Model::check_width(const Matrix& X) const {
    if (X.cols != n_features())
        throw Error(std::string(family_name(family())) + ": feature count " +
                    std::to_string(X.cols) + " does not match training width " +
                    std::to_string(n_features()));
}

void Model::check_finite(const std::vector<double>& out) const {
    for (double v : out)
        if (!std::isfinite(v))
            throw DivergenceError(std::string(family_name(family())) +
                                  ": non-finite prediction");
}

std::unique_ptr<Model> fit_model(const HyperConfig& config, const Matrix& X,
                                 const std::vector<double>& y,
                                 const GroupStructure* groups, std::uint64_t seed,
                                 double y_max) {
    if (X.rows != y.size()) throw Error("fit_model: X/y row mismatch");
    if (X.rows == 0) throw Error("fit_model: empty training set");
    switch (config.family) {
        case Family::MLM_RI:
        case Family::MLM_RS:
            if (!groups) throw Error("fit_model: MLM requires group structure");
            return MlmModel::fit(config, X, y, *groups, seed);
        case Family::NB: return NbModel::fit(config, X, y, seed);
        case Family::KNN: return KnnModel::fit(config, X, y, seed);
        case Family::RBFN: return RbfnModel::fit(config, X, y, seed, y_max);
        case Family::FFNN: return FfnnModel::fit(config, X, y, seed, y_max);
        case Family::RT: return RtModel::fit(config, X, y, seed);
        case Family::RF: return RfModel::fit(config, X, y, seed);
        case Family::GBM: return GbmModel::fit(config, X, y, seed);
        case Family::SVR: return SvrModel::fit(config, X, y, seed);
    }
    throw Error("unknown family");
}

nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j = model.to_json();
    j["format"] = "tardy-model";
    j["version"] = kModelFormatVersion;
    j["family"] = family_name(model.family());
    j["config"] = model.config().to_json();
    return j;
}

std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tardy-model")
        throw Error("not a model file (missing format tag)");
    if (j.value("version", 0) != kModelFormatVersion)
        throw Error("unsupported model format version");
    Family f = family_from_name(j.at("family").get<std::string>());
    switch (f) {
        case Family::MLM_RI:
        case Family::MLM_RS: return MlmModel::from_json(j);
        case Family::NB: return NbModel::from_json(j);
        case Family::KNN: return KnnModel::from_json(j);
        case Family::RBFN: return RbfnModel::from_json(j);
        case Family::FFNN: return FfnnModel::from_json(j);
        case Family::RT: return RtModel::from_json(j);
        case Family::RF: return RfModel::from_json(j);
        case Family::GBM: return GbmModel::from_json(j);
        case Family::SVR: return SvrModel::from_json(j);
    }
    throw Error("unknown family");
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

std::unique_ptr<Model> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

std::vector<double> feature_importance(const Model& model) {
    const auto* provider = dynamic_cast<const ImportanceProvider*>(&model);
    if (!provider)
        throw Error(std::string("feature importance unsupported for ") +
                    family_name(model.family()));
    auto raw = provider->raw_importance();
    double total = 0.0;
    for (double v : raw) total += v;
    if (total <= 0.0) {
        // no splits anywhere: spread evenly
        for (auto& v : raw) v = 1.0 / static_cast<double>(raw.size());
        return raw;
    }
    for (auto& v : raw) v /= total;
    return raw;
}

}  // namespace tardy
