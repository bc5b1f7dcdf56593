#pragma once

#include <map>

#include "tardy/model.hpp"

namespace tardy {

/// Linear mixed model fitted by EM point estimation: fixed effects for all
/// features plus an intercept, random intercepts for student and course,
/// and (RS variant) random slopes by course for the assignment-level
/// feature columns named in the config. Prediction adds the estimated group
/// effects, zero for groups unseen in training.
class MlmModel final : public Model {
public:
    static std::unique_ptr<MlmModel> fit(const HyperConfig& config, const Matrix& X,
                                         const std::vector<double>& y,
                                         const GroupStructure& groups,
                                         std::uint64_t seed);

    Family family() const override { return family_; }
    std::size_t n_features() const override { return fixed_.size() - 1; }
    std::vector<double> predict(const Matrix& X) const override;
    std::vector<double> predict(const Matrix& X,
                                const GroupStructure& groups) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<MlmModel> from_json(const nlohmann::json& j);

    const std::vector<double>& fixed_effects() const { return fixed_; }  // [intercept, betas]
    double residual_variance() const { return sigma2_; }
    double student_intercept_variance() const { return var_student_; }
    double course_intercept_variance() const { return var_course_; }
    const std::vector<double>& slope_variances() const { return var_slopes_; }
    bool ridge_stabilized() const { return ridge_stabilized_; }
    std::size_t em_iterations() const { return em_iters_; }

private:
    Family family_ = Family::MLM_RI;
    std::vector<double> fixed_;                    // intercept first
    std::map<int, double> student_effect_;
    std::map<int, double> course_effect_;
    std::vector<std::size_t> slope_columns_;       // feature columns with course slopes
    std::vector<std::map<int, double>> slope_effect_;  // per slope column
    double sigma2_ = 1.0;
    double var_student_ = 0.0;
    double var_course_ = 0.0;
    std::vector<double> var_slopes_;
    bool ridge_stabilized_ = false;
    std::size_t em_iters_ = 0;
};

}  // namespace tardy
