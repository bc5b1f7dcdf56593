#include "tardy/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tardy/rng.hpp"

namespace tardy {

namespace {

void assign_points(const Matrix& points, const Matrix& centers,
                   std::vector<std::size_t>& assignment) {
    for (std::size_t i = 0; i < points.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < centers.rows; ++c) {
            double d = squared_distance(points.row(i), centers.row(c));
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        assignment[i] = best_c;
    }
}

double compute_sse(const Matrix& points, const Matrix& centers,
                   const std::vector<std::size_t>& assignment) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i)
        sse += squared_distance(points.row(i), centers.row(assignment[i]));
    return sse;
}

/// One Lloyd sweep: recompute means, repair empty clusters with the point
/// farthest from its center, then reassign.
void lloyd_iteration(const Matrix& points, Matrix& centers,
                     std::vector<std::size_t>& assignment) {
    const std::size_t k = centers.rows;
    std::vector<std::size_t> counts(k, 0);
    Matrix sums(k, points.cols, 0.0);
    for (std::size_t i = 0; i < points.rows; ++i) {
        ++counts[assignment[i]];
        for (std::size_t d = 0; d < points.cols; ++d)
            sums.at(assignment[i], d) += points.at(i, d);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < points.cols; ++d)
            centers.at(c, d) = sums.at(c, d) / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        // farthest point from its current center (lowest index on ties)
        double far = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < points.rows; ++i) {
            double d = squared_distance(points.row(i), centers.row(assignment[i]));
            if (d > far) {
                far = d;
                far_i = i;
            }
        }
        for (std::size_t d = 0; d < points.cols; ++d)
            centers.at(c, d) = points.at(far_i, d);
        assignment[far_i] = c;
    }
    assign_points(points, centers, assignment);
}

Clustering run_kmeans(const Matrix& points, Matrix centers, std::size_t max_iters,
                      std::vector<double>* trace) {
    Clustering result;
    result.assignment.resize(points.rows);
    assign_points(points, centers, result.assignment);
    double sse = compute_sse(points, centers, result.assignment);
    for (std::size_t it = 0; it < max_iters; ++it) {
        auto prev = result.assignment;
        lloyd_iteration(points, centers, result.assignment);
        sse = compute_sse(points, centers, result.assignment);
        if (trace) trace->push_back(sse);
        if (result.assignment == prev) break;
    }
    result.centers = std::move(centers);
    result.sse = sse;
    return result;
}

}  // namespace

Clustering kmeans(const Matrix& points, std::size_t k, std::size_t max_iters,
                  std::uint64_t seed) {
    if (k < 1) throw Error("kmeans: k must be >= 1");
    if (points.rows == 0) throw Error("kmeans: no points");
    if (k > points.rows) throw Error("kmeans: k exceeds number of points");

    Rng rng(derive_seed(seed, "kmeans"));
    auto init = rng.sample_without_replacement(points.rows, k);
    Matrix centers(k, points.cols);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < points.cols; ++d)
            centers.at(c, d) = points.at(init[c], d);

    std::vector<double> trace;
    auto result = run_kmeans(points, std::move(centers), max_iters, &trace);
    result.sse_trace = std::move(trace);
    return result;
}

Clustering random_swap(const Matrix& points, std::size_t k, std::size_t swap_iters,
                       std::uint64_t seed) {
    auto best = kmeans(points, k, 100, seed);
    Rng rng(derive_seed(seed, "swap"));
    for (std::size_t it = 0; it < swap_iters; ++it) {
        std::size_t c = rng.index(k);
        std::size_t p = rng.index(points.rows);
        Matrix centers = best.centers;
        for (std::size_t d = 0; d < points.cols; ++d) centers.at(c, d) = points.at(p, d);
        auto candidate = run_kmeans(points, std::move(centers), 2, nullptr);
        if (candidate.sse < best.sse) {
            candidate.sse_trace = best.sse_trace;
            candidate.sse_trace.push_back(candidate.sse);
            best = std::move(candidate);
        }
    }
    return best;
}

double silhouette(const Matrix& points, const Clustering& clustering) {
    const std::size_t k = clustering.k();
    if (k < 2) throw Error("silhouette: need at least 2 clusters");
    const std::size_t n = points.rows;

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[clustering.assignment[i]];

    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[clustering.assignment[j]] +=
                std::sqrt(squared_distance(points.row(i), points.row(j)));
        }
        std::size_t own = clustering.assignment[i];
        if (counts[own] <= 1) continue;  // singleton contributes 0
        double a = dist_sum[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(counts[c]));
        }
        double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

std::pair<std::size_t, Clustering> select_cluster_count(const Matrix& points,
                                                        std::size_t k_min,
                                                        std::size_t k_max,
                                                        std::uint64_t seed,
                                                        std::size_t swap_iters) {
    if (k_min < 2 || k_min > k_max || k_max > points.rows)
        throw Error("select_cluster_count: need 2 <= k_min <= k_max <= n");
    double best_si = -std::numeric_limits<double>::infinity();
    std::size_t best_k = k_min;
    Clustering best;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto c = random_swap(points, k, swap_iters, derive_seed(seed, "select_k", k));
        double si = silhouette(points, c);
        if (si > best_si) {
            best_si = si;
            best_k = k;
            best = std::move(c);
        }
    }
    return {best_k, std::move(best)};
}

}  // namespace tardy
