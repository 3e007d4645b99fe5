#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spade/errors.hpp"
#include "spade/graph.hpp"

// Exact k-nearest-neighbor graph over row vectors. Brute-force O(N^2 m)
// search; at the node counts this toolkit targets an approximate index would
// buy nothing.

namespace spade {

enum class Metric { euclidean, cosine };

struct KnnConfig {
  int k = 10;
  Metric metric = Metric::euclidean;
};

inline std::string to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "cosine";
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw UsageError("unknown metric '" + s + "' (euclidean|cosine)");
}

namespace detail {

/// Distance from row i to row j. Euclidean uses the squared norm (same
/// ordering, cheaper); cosine is 1 - cos(x, y) with zero vectors treated as
/// similarity 0.
inline double row_distance(const Eigen::MatrixXd& pts, int i, int j,
                           Metric metric, const Eigen::VectorXd& norms) {
  if (metric == Metric::euclidean)
    return (pts.row(i) - pts.row(j)).squaredNorm();
  double denom = norms[i] * norms[j];
  if (denom == 0.0) return 1.0;
  return 1.0 - pts.row(i).dot(pts.row(j)) / denom;
}

} // namespace detail

/// Exact kNN graph: each node's k nearest rows (self excluded, distance ties
/// broken by smaller node index), directed lists symmetrized by union, unit
/// edge weights.
inline SparseGraph knn_graph(const Eigen::MatrixXd& points,
                             const KnnConfig& cfg) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw UsageError("knn: need at least 2 points");
  if (cfg.k < 1 || cfg.k >= n)
    throw UsageError("knn: k=" + std::to_string(cfg.k) +
                     " out of range for N=" + std::to_string(n));
  if (!points.allFinite())
    throw DataError("knn: input matrix contains NaN or Inf");

  Eigen::VectorXd norms;
  if (cfg.metric == Metric::cosine) norms = points.rowwise().norm();

  std::vector<WeightedEdge> edges;
  edges.reserve(static_cast<std::size_t>(n) * cfg.k);
  std::vector<std::pair<double, int>> cand(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand[m++] = {detail::row_distance(points, i, j, cfg.metric, norms), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + cfg.k, cand.end());
    for (int t = 0; t < cfg.k; ++t)
      edges.push_back({i, cand[t].second, 1.0});
  }
  // union symmetrization: build_graph merges the two directions (max of two
  // unit weights is a unit weight).
  return SparseGraph::build(n, edges);
}

} // namespace spade
