#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "tardy/core.hpp"

namespace tardy {

enum class Family { MLM_RI, MLM_RS, NB, KNN, RBFN, FFNN, RT, RF, GBM, SVR };

const char* family_name(Family f);
Family family_from_name(const std::string& s);

/// One hyperparameter assignment. Numeric parameters live in `num`,
/// categorical ones (kernel, weighting, loss, slope columns) in `str`.
struct HyperConfig {
    Family family = Family::KNN;
    std::map<std::string, double> num;
    std::map<std::string, std::string> str;

    double get_num(const std::string& key) const;
    double get_num(const std::string& key, double fallback) const;
    std::string get_str(const std::string& key, const std::string& fallback = "") const;

    nlohmann::json to_json() const;
    static HyperConfig from_json(const nlohmann::json& j);
    /// Compact single-line rendering for reports and logs.
    std::string describe() const;
};

/// A fitted regressor. Fit is deterministic given (data, config, seed);
/// predict never mutates the model and always returns finite values.
class Model {
public:
    virtual ~Model() = default;

    virtual Family family() const = 0;
    virtual std::size_t n_features() const = 0;
    virtual std::vector<double> predict(const Matrix& X) const = 0;
    /// Models with group effects override this; the default ignores groups.
    virtual std::vector<double> predict(const Matrix& X, const GroupStructure&) const {
        return predict(X);
    }
    virtual nlohmann::json to_json() const = 0;

    const HyperConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    bool converged() const { return converged_; }
    /// Validation-score trajectory for the gradient-descent families.
    const std::vector<double>& training_trajectory() const { return trajectory_; }

protected:
    void check_width(const Matrix& X) const;
    void check_finite(const std::vector<double>& out) const;

    HyperConfig config_;
    std::uint64_t seed_ = 0;
    bool converged_ = true;
    std::vector<double> trajectory_;
};

/// Dispatches on config.family. `groups` is required by the multilevel
/// families and ignored elsewhere. `y_max` feeds the validation score used
/// for checkpointing in the gradient-descent families.
std::unique_ptr<Model> fit_model(const HyperConfig& config, const Matrix& X,
                                 const std::vector<double>& y,
                                 const GroupStructure* groups, std::uint64_t seed,
                                 double y_max = 1.0);

// Serialization: a self-describing JSON container (format tag, version,
// family, config, parameters). Doubles round-trip exactly.
inline constexpr int kModelFormatVersion = 1;
nlohmann::json model_to_json(const Model& model);
std::unique_ptr<Model> model_from_json(const nlohmann::json& j);
void save_model(const Model& model, const std::string& path);
std::unique_ptr<Model> load_model(const std::string& path);

/// Normalized mean-decrease-in-impurity weights; throws unless the model is
/// a tree ensemble (RF or GBM).
std::vector<double> feature_importance(const Model& model);

/// Implemented by the tree ensembles.
class ImportanceProvider {
public:
    virtual ~ImportanceProvider() = default;
    virtual std::vector<double> raw_importance() const = 0;
};

}  // namespace tardy
