#pragma once

#include "tardy/model.hpp"

namespace tardy {

enum class KernelType { LIN, POL, TAH, RBF, VS };

KernelType kernel_from_name(const std::string& s);
const char* kernel_name(KernelType k);

/// Kernel parameters: degree/coef0 for POL, kappa/theta for TAH, gamma for
/// RBF and the L1-exponential VS kernel.
struct KernelSpec {
    KernelType type = KernelType::LIN;
    double degree = 2.0;
    double coef0 = 1.0;
    double kappa = 0.5;
    double theta = 0.0;
    double gamma = 1.0;

    static KernelSpec from_config(const HyperConfig& config);
};

double kernel_eval(const KernelSpec& k, std::span<const double> x,
                   std::span<const double> y);

/// Epsilon-insensitive support vector regression trained by sequential
/// two-variable optimization on the dual, stopping when the maximal KKT
/// violation drops below tolerance.
class SvrModel final : public Model {
public:
    static std::unique_ptr<SvrModel> fit(const HyperConfig& config, const Matrix& X,
                                         const std::vector<double>& y,
                                         std::uint64_t seed);

    Family family() const override { return Family::SVR; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict(const Matrix& X) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<SvrModel> from_json(const nlohmann::json& j);

    double bias() const { return bias_; }
    std::size_t n_support() const { return support_.rows; }
    /// Final maximal KKT violation (m(a) - M(a)) at termination.
    double kkt_violation() const { return kkt_violation_; }
    /// Dual variables (alpha, alpha*) per training row; kept for the
    /// complementary-slackness checks, not serialized.
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& alpha_star() const { return alpha_star_; }

private:
    std::size_t n_features_ = 0;
    KernelSpec kernel_;
    Matrix support_;                 // support vector rows
    std::vector<double> coef_;       // beta = alpha - alpha* per support vector
    double bias_ = 0.0;
    double kkt_violation_ = 0.0;
    std::vector<double> alpha_, alpha_star_;
};

}  // namespace tardy
