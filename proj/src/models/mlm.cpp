#include "tardy/models/mlm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tardy {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr std::size_t kMaxEmIters = 500;
constexpr double kRelTol = 1e-6;

std::vector<std::size_t> parse_slope_columns(const std::string& spec) {
    std::vector<std::size_t> cols;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) cols.push_back(std::stoul(tok));
    return cols;
}

/// Dense local ids for the distinct values seen in training, in
/// first-appearance order; returns (local index per row, originals).
std::pair<std::vector<std::size_t>, std::vector<int>> localize(
    const std::vector<int>& ids) {
    std::vector<std::size_t> local(ids.size());
    std::vector<int> originals;
    std::map<int, std::size_t> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = seen.find(ids[i]);
        if (it == seen.end()) {
            it = seen.emplace(ids[i], originals.size()).first;
            originals.push_back(ids[i]);
        }
        local[i] = it->second;
    }
    return {std::move(local), std::move(originals)};
}

}  // namespace

std::unique_ptr<MlmModel> MlmModel::fit(const HyperConfig& config, const Matrix& X,
                                        const std::vector<double>& y,
                                        const GroupStructure& groups,
                                        std::uint64_t seed) {
    if (groups.student.size() != X.rows || groups.course.size() != X.rows)
        throw Error("MLM: group structure does not cover all rows");

    auto model = std::make_unique<MlmModel>();
    model->config_ = config;
    model->seed_ = seed;
    model->family_ = config.family;

    const bool random_slopes = config.family == Family::MLM_RS;
    if (random_slopes)
        model->slope_columns_ = parse_slope_columns(config.get_str("slope_cols", ""));
    for (std::size_t c : model->slope_columns_)
        if (c >= X.cols) throw ConfigError("MLM: slope column out of range");

    const std::size_t n = X.rows;
    const std::size_t p = X.cols + 1;  // intercept first

    auto [stu_local, stu_ids] = localize(groups.student);
    auto [crs_local, crs_ids] = localize(groups.course);
    const std::size_t q_s = stu_ids.size();
    const std::size_t q_c = crs_ids.size();
    const std::size_t n_slope = model->slope_columns_.size();

    // variance blocks: student intercepts, course intercepts, one per slope
    std::vector<std::size_t> block_offset{0, q_s, q_s + q_c};
    for (std::size_t b = 0; b < n_slope; ++b)
        block_offset.push_back(block_offset.back() + q_c);
    const std::size_t q_total = block_offset.back();

    Eigen::MatrixXd Xd(n, p);
    Eigen::VectorXd yd(n);
    for (std::size_t i = 0; i < n; ++i) {
        Xd(static_cast<long>(i), 0) = 1.0;
        for (std::size_t j = 0; j < X.cols; ++j)
            Xd(static_cast<long>(i), static_cast<long>(j + 1)) = X.at(i, j);
        yd(static_cast<long>(i)) = y[i];
    }
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, static_cast<long>(q_total));
    for (std::size_t i = 0; i < n; ++i) {
        Z(static_cast<long>(i), static_cast<long>(stu_local[i])) = 1.0;
        Z(static_cast<long>(i), static_cast<long>(q_s + crs_local[i])) = 1.0;
        for (std::size_t b = 0; b < n_slope; ++b)
            Z(static_cast<long>(i),
              static_cast<long>(q_s + q_c + b * q_c + crs_local[i])) =
                X.at(i, model->slope_columns_[b]);
    }

    const Eigen::MatrixXd XtX = Xd.transpose() * Xd;
    const Eigen::MatrixXd ZtZ = Z.transpose() * Z;
    const Eigen::MatrixXd ZtX = Z.transpose() * Xd;
    const Eigen::VectorXd Zty = Z.transpose() * yd;
    const Eigen::VectorXd Xty = Xd.transpose() * yd;

    auto solve_beta = [&](const Eigen::VectorXd& rhs) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
        Eigen::VectorXd beta = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !beta.allFinite() ||
            ldlt.rcond() < 1e-12) {
            model->ridge_stabilized_ = true;
            Eigen::MatrixXd reg = XtX;
            reg.diagonal().array() += 1e-8 * (XtX.trace() / static_cast<double>(p) + 1.0);
            beta = reg.ldlt().solve(rhs);
        }
        return beta;
    };

    const std::size_t n_blocks = 2 + n_slope;
    double var_y = 0.0;
    {
        double my = yd.mean();
        for (std::size_t i = 0; i < n; ++i) {
            double d = y[i] - my;
            var_y += d * d;
        }
        var_y = std::max(var_y / static_cast<double>(n), kVarianceFloor);
    }
    double sigma2 = std::max(var_y / 2.0, kVarianceFloor);
    std::vector<double> block_var(n_blocks,
                                  std::max(var_y / (2.0 * static_cast<double>(n_blocks)),
                                           kVarianceFloor));
    std::vector<std::size_t> block_size{q_s, q_c};
    for (std::size_t b = 0; b < n_slope; ++b) block_size.push_back(q_c);

    Eigen::VectorXd beta = solve_beta(Xty);
    Eigen::VectorXd b_hat = Eigen::VectorXd::Zero(static_cast<long>(q_total));
    const auto I = Eigen::MatrixXd::Identity(static_cast<long>(q_total),
                                             static_cast<long>(q_total));
    std::vector<char> pinned(n_blocks, 0);

    // Parameter-expanded EM: each M-step jointly refits the fixed effects
    // and a scale per random-effect block, which removes the slow creep
    // plain EM shows on variance components.
    for (std::size_t iter = 0; iter < kMaxEmIters; ++iter) {
        Eigen::MatrixXd M1 = ZtZ;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            double lambda = sigma2 / block_var[b];
            for (std::size_t t = block_offset[b]; t < block_offset[b] + block_size[b]; ++t)
                M1(static_cast<long>(t), static_cast<long>(t)) += lambda;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M1);
        b_hat = ldlt.solve(Zty - ZtX * beta);
        Eigen::MatrixXd Minv = ldlt.solve(I);  // posterior cov of b = sigma2 * Minv

        // per-block posterior second moments
        std::vector<double> blk_ss(n_blocks, 0.0), blk_tr(n_blocks, 0.0);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            for (std::size_t t = block_offset[b]; t < block_offset[b] + block_size[b]; ++t) {
                blk_ss[b] += b_hat(static_cast<long>(t)) * b_hat(static_cast<long>(t));
                blk_tr[b] += Minv(static_cast<long>(t), static_cast<long>(t));
            }
        }

        // blocks that still carry mass participate in the expansion step
        std::vector<std::size_t> active;
        for (std::size_t b = 0; b < n_blocks; ++b)
            if (!pinned[b] && blk_ss[b] + sigma2 * blk_tr[b] >
                                  1e-12 * static_cast<double>(block_size[b]))
                active.push_back(b);

        // joint (beta, alpha) normal equations:
        //   min E || y - X beta - sum_b alpha_b Z_b b_b ||^2
        const std::size_t pk = p + active.size();
        Eigen::MatrixXd A(pk, pk);
        Eigen::VectorXd rhs(pk);
        A.topLeftCorner(static_cast<long>(p), static_cast<long>(p)) = XtX;
        rhs.head(static_cast<long>(p)) = Xty;
        std::vector<Eigen::VectorXd> zb(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) {
            std::size_t b = active[a];
            zb[a] = Z.middleCols(static_cast<long>(block_offset[b]),
                                 static_cast<long>(block_size[b])) *
                    b_hat.segment(static_cast<long>(block_offset[b]),
                                  static_cast<long>(block_size[b]));
        }
        auto block_cross_trace = [&](std::size_t bj, std::size_t bk) {
            // tr(Z_j' Z_k Cov(b_k, b_j)) = sigma2 * sum over the (j,k)
            // rectangle of ZtZ .* Minv
            double t = 0.0;
            for (std::size_t r = block_offset[bj]; r < block_offset[bj] + block_size[bj]; ++r)
                for (std::size_t c = block_offset[bk]; c < block_offset[bk] + block_size[bk]; ++c)
                    t += ZtZ(static_cast<long>(r), static_cast<long>(c)) *
                         Minv(static_cast<long>(r), static_cast<long>(c));
            return sigma2 * t;
        };
        Eigen::MatrixXd cross_tr(active.size(), active.size());
        for (std::size_t a = 0; a < active.size(); ++a) {
            std::size_t b = active[a];
            A.block(0, static_cast<long>(p + a), static_cast<long>(p), 1) =
                Xd.transpose() * zb[a];
            A.block(static_cast<long>(p + a), 0, 1, static_cast<long>(p)) =
                (Xd.transpose() * zb[a]).transpose();
            rhs(static_cast<long>(p + a)) =
                b_hat.segment(static_cast<long>(block_offset[b]),
                              static_cast<long>(block_size[b]))
                    .dot(Zty.segment(static_cast<long>(block_offset[b]),
                                     static_cast<long>(block_size[b])));
            for (std::size_t a2 = 0; a2 < active.size(); ++a2) {
                cross_tr(static_cast<long>(a), static_cast<long>(a2)) =
                    block_cross_trace(active[a], active[a2]);
                A(static_cast<long>(p + a), static_cast<long>(p + a2)) =
                    zb[a].dot(zb[a2]) +
                    cross_tr(static_cast<long>(a), static_cast<long>(a2));
            }
        }
        Eigen::VectorXd sol;
        {
            Eigen::LDLT<Eigen::MatrixXd> aldlt(A);
            sol = aldlt.solve(rhs);
            if (aldlt.info() != Eigen::Success || !sol.allFinite()) {
                Eigen::MatrixXd reg = A;
                reg.diagonal().array() +=
                    1e-10 * (A.trace() / static_cast<double>(pk) + 1.0);
                sol = reg.ldlt().solve(rhs);
                model->ridge_stabilized_ = true;
            }
        }
        beta = sol.head(static_cast<long>(p));
        std::vector<double> alpha(n_blocks, 1.0);
        for (std::size_t a = 0; a < active.size(); ++a)
            alpha[active[a]] = sol(static_cast<long>(p + a));

        // residual variance under the expanded fit
        Eigen::VectorXd fitted = Xd * beta;
        for (std::size_t a = 0; a < active.size(); ++a)
            fitted += alpha[active[a]] * zb[a];
        double rss = (yd - fitted).squaredNorm();
        double trace_term = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t a2 = 0; a2 < active.size(); ++a2)
                trace_term += alpha[active[a]] * alpha[active[a2]] *
                              cross_tr(static_cast<long>(a), static_cast<long>(a2));
        double new_sigma2 =
            std::max((rss + trace_term) / static_cast<double>(n), kVarianceFloor);

        double max_rel = std::abs(new_sigma2 - sigma2) / std::max(sigma2, kVarianceFloor);
        std::vector<double> new_var(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            if (pinned[b]) {
                new_var[b] = kVarianceFloor;
                continue;
            }
            new_var[b] = std::max(alpha[b] * alpha[b] *
                                      (blk_ss[b] + sigma2 * blk_tr[b]) /
                                      static_cast<double>(block_size[b]),
                                  kVarianceFloor);
            // EM approaches a zero component only geometrically; once a
            // block is tiny and still shrinking, pin it to the floor
            if (new_var[b] < 1e-5 && new_var[b] < 0.9 * block_var[b]) {
                new_var[b] = kVarianceFloor;
                pinned[b] = 1;
            }
            max_rel = std::max(max_rel, std::abs(new_var[b] - block_var[b]) /
                                            std::max(block_var[b], kVarianceFloor));
        }
        sigma2 = new_sigma2;
        block_var = new_var;
        model->em_iters_ = iter + 1;
        if (max_rel < kRelTol) break;
    }

    // final shrinkage pass so the stored effects match the converged variances
    {
        Eigen::MatrixXd M1 = ZtZ;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            double lambda = sigma2 / block_var[b];
            for (std::size_t t = block_offset[b]; t < block_offset[b] + block_size[b]; ++t)
                M1(static_cast<long>(t), static_cast<long>(t)) += lambda;
        }
        b_hat = M1.ldlt().solve(Zty - ZtX * beta);
        beta = solve_beta(Xty - ZtX.transpose() * b_hat);
    }

    model->fixed_.assign(beta.data(), beta.data() + p);
    model->sigma2_ = sigma2;
    model->var_student_ = block_var[0];
    model->var_course_ = block_var[1];
    model->var_slopes_.assign(block_var.begin() + 2, block_var.end());
    for (std::size_t s = 0; s < q_s; ++s)
        model->student_effect_[stu_ids[s]] = b_hat(static_cast<long>(s));
    for (std::size_t c = 0; c < q_c; ++c)
        model->course_effect_[crs_ids[c]] = b_hat(static_cast<long>(q_s + c));
    model->slope_effect_.resize(n_slope);
    for (std::size_t b = 0; b < n_slope; ++b)
        for (std::size_t c = 0; c < q_c; ++c)
            model->slope_effect_[b][crs_ids[c]] =
                b_hat(static_cast<long>(q_s + q_c + b * q_c + c));
    return model;
}

std::vector<double> MlmModel::predict(const Matrix& X) const {
    check_width(X);
    std::vector<double> out(X.rows, fixed_[0]);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j) out[i] += fixed_[j + 1] * X.at(i, j);
    check_finite(out);
    return out;
}

std::vector<double> MlmModel::predict(const Matrix& X,
                                      const GroupStructure& groups) const {
    if (groups.student.size() != X.rows || groups.course.size() != X.rows)
        throw Error("MLM: group structure does not cover all rows");
    auto out = predict(X);
    auto lookup = [](const std::map<int, double>& m, int id) {
        auto it = m.find(id);
        return it == m.end() ? 0.0 : it->second;  // unseen group -> 0
    };
    for (std::size_t i = 0; i < X.rows; ++i) {
        out[i] += lookup(student_effect_, groups.student[i]);
        out[i] += lookup(course_effect_, groups.course[i]);
        for (std::size_t b = 0; b < slope_columns_.size(); ++b)
            out[i] += lookup(slope_effect_[b], groups.course[i]) *
                      X.at(i, slope_columns_[b]);
    }
    check_finite(out);
    return out;
}

namespace {
nlohmann::json effects_to_json(const std::map<int, double>& m) {
    nlohmann::json keys = nlohmann::json::array();
    nlohmann::json vals = nlohmann::json::array();
    for (const auto& [k, v] : m) {
        keys.push_back(k);
        vals.push_back(v);
    }
    return {{"keys", keys}, {"values", vals}};
}

std::map<int, double> effects_from_json(const nlohmann::json& j) {
    std::map<int, double> m;
    const auto& keys = j.at("keys");
    const auto& vals = j.at("values");
    for (std::size_t i = 0; i < keys.size(); ++i)
        m[keys[i].get<int>()] = vals[i].get<double>();
    return m;
}
}  // namespace

nlohmann::json MlmModel::to_json() const {
    nlohmann::json j;
    j["fixed"] = fixed_;
    j["student_effect"] = effects_to_json(student_effect_);
    j["course_effect"] = effects_to_json(course_effect_);
    j["slope_columns"] = slope_columns_;
    nlohmann::json slopes = nlohmann::json::array();
    for (const auto& m : slope_effect_) slopes.push_back(effects_to_json(m));
    j["slope_effect"] = slopes;
    j["sigma2"] = sigma2_;
    j["var_student"] = var_student_;
    j["var_course"] = var_course_;
    j["var_slopes"] = var_slopes_;
    j["ridge_stabilized"] = ridge_stabilized_;
    return j;
}

std::unique_ptr<MlmModel> MlmModel::from_json(const nlohmann::json& j) {
    auto m = std::make_unique<MlmModel>();
    m->config_ = HyperConfig::from_json(j.at("config"));
    m->family_ = m->config_.family;
    m->fixed_ = j.at("fixed").get<std::vector<double>>();
    m->student_effect_ = effects_from_json(j.at("student_effect"));
    m->course_effect_ = effects_from_json(j.at("course_effect"));
    m->slope_columns_ = j.at("slope_columns").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("slope_effect"))
        m->slope_effect_.push_back(effects_from_json(s));
    m->sigma2_ = j.at("sigma2").get<double>();
    m->var_student_ = j.at("var_student").get<double>();
    m->var_course_ = j.at("var_course").get<double>();
    m->var_slopes_ = j.at("var_slopes").get<std::vector<double>>();
    m->ridge_stabilized_ = j.at("ridge_stabilized").get<bool>();
    return m;
}

}  // namespace tardy
