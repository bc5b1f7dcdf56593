#include "tardy/models/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tardy {

KernelType kernel_from_name(const std::string& s) {
    if (s == "lin") return KernelType::LIN;
    if (s == "pol") return KernelType::POL;
    if (s == "tah") return KernelType::TAH;
    if (s == "rbf") return KernelType::RBF;
    if (s == "vs") return KernelType::VS;
    throw ConfigError("unknown kernel: " + s);
}

const char* kernel_name(KernelType k) {
    switch (k) {
        case KernelType::LIN: return "lin";
        case KernelType::POL: return "pol";
        case KernelType::TAH: return "tah";
        case KernelType::RBF: return "rbf";
        case KernelType::VS: return "vs";
    }
    throw Error("unknown kernel");
}

KernelSpec KernelSpec::from_config(const HyperConfig& config) {
    KernelSpec k;
    k.type = kernel_from_name(config.get_str("kernel", "lin"));
    k.degree = config.get_num("degree", 2.0);
    k.coef0 = config.get_num("coef0", 1.0);
    k.kappa = config.get_num("kappa", 0.5);
    k.theta = config.get_num("theta", 0.0);
    k.gamma = config.get_num("gamma", 1.0);
    return k;
}

double kernel_eval(const KernelSpec& k, std::span<const double> x,
                   std::span<const double> y) {
    if (x.size() != y.size()) throw Error("kernel_eval: dimension mismatch");
    switch (k.type) {
        case KernelType::LIN: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
            return dot;
        }
        case KernelType::POL: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
            return std::pow(dot + k.coef0, k.degree);
        }
        case KernelType::TAH: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
            return std::tanh(k.kappa * dot + k.theta);
        }
        case KernelType::RBF:
            return std::exp(-k.gamma * squared_distance(x, y));
        case KernelType::VS: {
            double l1 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(x[i] - y[i]);
            return std::exp(-k.gamma * l1);
        }
    }
    throw Error("unknown kernel");
}

namespace {
constexpr double kTau = 1e-12;  // curvature floor for indefinite kernels
}

std::unique_ptr<SvrModel> SvrModel::fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        std::uint64_t seed) {
    const double C = config.get_num("C");
    const double epsilon = config.get_num("epsilon");
    const double tol = config.get_num("tol", 1e-3);
    const auto max_iters =
        static_cast<std::size_t>(config.get_num("max_iters", 200000));
    if (C <= 0.0) throw ConfigError("SVR: C must be positive");
    if (epsilon < 0.0) throw ConfigError("SVR: epsilon must be non-negative");

    auto model = std::make_unique<SvrModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->n_features_ = X.cols;
    model->kernel_ = KernelSpec::from_config(config);

    const std::size_t n = X.rows;
    const std::size_t m = 2 * n;  // [alpha..., alpha*...]

    // precomputed kernel matrix
    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double v = kernel_eval(model->kernel_, X.row(i), X.row(j));
            K.at(i, j) = v;
            K.at(j, i) = v;
        }
    }

    // dual problem in libsvm form: min 1/2 a' Q a + p' a with
    // Q_st = s_s s_t K(i_s, i_t), p_t = eps - s_t y_t, sum s_t a_t = 0
    auto sgn = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
    auto idx = [n](std::size_t t) { return t < n ? t : t - n; };

    std::vector<double> a(m, 0.0);
    std::vector<double> grad(m);
    for (std::size_t t = 0; t < m; ++t) grad[t] = epsilon - sgn(t) * y[idx(t)];

    double violation = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < max_iters; ++it) {
        // maximal violating pair
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        std::size_t up_t = m, low_t = m;
        for (std::size_t t = 0; t < m; ++t) {
            double s = sgn(t);
            bool in_up = (s > 0.0 && a[t] < C) || (s < 0.0 && a[t] > 0.0);
            bool in_low = (s > 0.0 && a[t] > 0.0) || (s < 0.0 && a[t] < C);
            double v = -s * grad[t];
            if (in_up && v > up_best) {
                up_best = v;
                up_t = t;
            }
            if (in_low && v < low_best) {
                low_best = v;
                low_t = t;
            }
        }
        violation = up_best - low_best;
        if (up_t == m || low_t == m || violation < tol) break;

        const std::size_t ti = up_t, tj = low_t;
        const double si = sgn(ti), sj = sgn(tj);
        const double k_ii = K.at(idx(ti), idx(ti));
        const double k_jj = K.at(idx(tj), idx(tj));
        const double k_ij = K.at(idx(ti), idx(tj));
        const double old_i = a[ti], old_j = a[tj];

        if (si != sj) {
            double quad = k_ii + k_jj + 2.0 * si * sj * k_ij;
            if (quad <= 0.0) quad = kTau;
            double delta = (-grad[ti] - grad[tj]) / quad;
            double diff = a[ti] - a[tj];
            a[ti] += delta;
            a[tj] += delta;
            if (diff > 0.0 && a[tj] < 0.0) {
                a[tj] = 0.0;
                a[ti] = diff;
            } else if (diff <= 0.0 && a[ti] < 0.0) {
                a[ti] = 0.0;
                a[tj] = -diff;
            }
            if (diff > 0.0 && a[ti] > C) {
                a[ti] = C;
                a[tj] = C - diff;
            } else if (diff <= 0.0 && a[tj] > C) {
                a[tj] = C;
                a[ti] = C + diff;
            }
        } else {
            double quad = k_ii + k_jj - 2.0 * si * sj * k_ij;
            if (quad <= 0.0) quad = kTau;
            double delta = (grad[ti] - grad[tj]) / quad;
            double sum = a[ti] + a[tj];
            a[ti] -= delta;
            a[tj] += delta;
            if (sum > C && a[ti] > C) {
                a[ti] = C;
                a[tj] = sum - C;
            } else if (sum <= C && a[tj] < 0.0) {
                a[tj] = 0.0;
                a[ti] = sum;
            }
            if (sum > C && a[tj] > C) {
                a[tj] = C;
                a[ti] = sum - C;
            } else if (sum <= C && a[ti] < 0.0) {
                a[ti] = 0.0;
                a[tj] = sum;
            }
        }

        const double di = a[ti] - old_i, dj = a[tj] - old_j;
        if (di == 0.0 && dj == 0.0) break;  // numerically stuck
        for (std::size_t t = 0; t < m; ++t) {
            double s = sgn(t);
            grad[t] += s * si * K.at(idx(t), idx(ti)) * di +
                       s * sj * K.at(idx(t), idx(tj)) * dj;
        }
    }
    model->converged_ = it < max_iters;
    model->kkt_violation_ = violation;

    std::vector<double> beta(n);
    for (std::size_t i = 0; i < n; ++i) beta[i] = a[i] - a[n + i];

    // bias from the KKT conditions: free duals give equalities, bound ones
    // give an interval; use the midpoint of the admissible range
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        for (std::size_t j = 0; j < n; ++j) g += beta[j] * K.at(i, j);
        if (a[i] > 0.0 && a[i] < C) {
            free_sum += y[i] - epsilon - g;
            ++free_count;
        } else if (a[n + i] > 0.0 && a[n + i] < C) {
            free_sum += y[i] + epsilon - g;
            ++free_count;
        } else if (a[i] >= C) {  // slack on the delay side: y - f >= eps
            hi = std::min(hi, y[i] - epsilon - g);
        } else if (a[n + i] >= C) {  // slack on the other side: f - y >= eps
            lo = std::max(lo, y[i] + epsilon - g);
        } else {  // both zero: -eps <= y - g - b <= eps
            lo = std::max(lo, y[i] - epsilon - g);
            hi = std::min(hi, y[i] + epsilon - g);
        }
    }
    if (free_count > 0) {
        model->bias_ = free_sum / static_cast<double>(free_count);
    } else {
        if (!std::isfinite(lo)) lo = hi;
        if (!std::isfinite(hi)) hi = lo;
        model->bias_ = 0.5 * (lo + hi);
    }

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i)
        if (beta[i] != 0.0) sv.push_back(i);
    model->support_ = X.take_rows(sv);
    model->coef_.reserve(sv.size());
    for (std::size_t i : sv) model->coef_.push_back(beta[i]);
    model->alpha_.assign(a.begin(), a.begin() + static_cast<long>(n));
    model->alpha_star_.assign(a.begin() + static_cast<long>(n), a.end());
    return model;
}

std::vector<double> SvrModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows, bias_);
    for (std::size_t q = 0; q < X.rows; ++q)
        for (std::size_t s = 0; s < support_.rows; ++s)
            out[q] += coef_[s] * kernel_eval(kernel_, support_.row(s), X.row(q));
    check_finite(out);
    return out;
}

nlohmann::json SvrModel::to_json() const {
    nlohmann::json j;
    j["n_features"] = n_features_;
    j["kernel"] = {{"type", kernel_name(kernel_.type)}, {"degree", kernel_.degree},
                   {"coef0", kernel_.coef0},            {"kappa", kernel_.kappa},
                   {"theta", kernel_.theta},            {"gamma", kernel_.gamma}};
    j["support_rows"] = support_.rows;
    j["support"] = support_.values;
    j["coef"] = coef_;
    j["bias"] = bias_;
    j["kkt_violation"] = kkt_violation_;
    j["converged"] = converged_;
    return j;
}

std::unique_ptr<SvrModel> SvrModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<SvrModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->n_features_ = j.at("n_features").get<std::size_t>();
    const auto& k = j.at("kernel");
    m->kernel_.type = kernel_from_name(k.at("type").get<std::string>());
    m->kernel_.degree = k.at("degree").get<double>();
    m->kernel_.coef0 = k.at("coef0").get<double>();
    m->kernel_.kappa = k.at("kappa").get<double>();
    m->kernel_.theta = k.at("theta").get<double>();
    m->kernel_.gamma = k.at("gamma").get<double>();
    m->support_ = Matrix(j.at("support_rows").get<std::size_t>(), m->n_features_);
    m->support_.values = j.at("support").get<std::vector<double>>();
    m->coef_ = j.at("coef").get<std::vector<double>>();
    m->bias_ = j.at("bias").get<double>();
    m->kkt_violation_ = j.at("kkt_violation").get<double>();
    m->converged_ = j.at("converged").get<bool>();
    return m;
}

}  // namespace tardy
