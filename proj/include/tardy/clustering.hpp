#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tardy/core.hpp"

namespace tardy {

struct Clustering {
    Matrix centers;
    std::vector<std::size_t> assignment;
    double sse = 0.0;
    /// SSE after each accepted step (Lloyd iteration or swap), for the
    /// monotonicity checks.
    std::vector<double> sse_trace;

    std::size_t k() const { return centers.rows; }
};

/// Lloyd's algorithm with seeded point-sampled initialization. Empty
/// clusters are reseeded with the point farthest from its assigned center.
Clustering kmeans(const Matrix& points, std::size_t k, std::size_t max_iters,
                  std::uint64_t seed);

/// k-means refined by random center swaps: replace a random center with a
/// random data point, polish with two Lloyd iterations, keep the swap only
/// on a strict SSE decrease. swap_iters = 0 reduces to plain k-means.
Clustering random_swap(const Matrix& points, std::size_t k, std::size_t swap_iters,
                       std::uint64_t seed);

/// Mean silhouette index in [-1, 1]; singleton points contribute 0.
double silhouette(const Matrix& points, const Clustering& clustering);

/// Runs random_swap for each k in [k_min, k_max] and returns the k with the
/// highest silhouette index (ties to the smallest k).
std::pair<std::size_t, Clustering> select_cluster_count(const Matrix& points,
                                                        std::size_t k_min,
                                                        std::size_t k_max,
                                                        std::uint64_t seed,
                                                        std::size_t swap_iters = 50);

}  // namespace tardy
