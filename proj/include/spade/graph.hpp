#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "spade/errors.hpp"

// Canonical sparse undirected graph plus the two matrix views the rest of the
// toolkit consumes: the combinatorial Laplacian L = D - W and the self-loop
// normalized propagation operator D~^{-1/2} (A + I) D~^{-1/2}.

namespace spade {

struct WeightedEdge {
  int u = 0;
  int v = 0;
  double weight = 1.0;
};

/// Undirected weighted graph in compressed adjacency form.
///
/// Neighbor lists are sorted by node index, weights are strictly positive,
/// self-loops are never stored and symmetry holds edge-for-edge. Immutable
/// after build(); safe to share across threads.
class SparseGraph {
public:
  SparseGraph() = default;

  /// Builds from an edge list. Duplicate (i, j) entries merge by maximum
  /// weight, (i, i) entries are dropped, (i, j) and (j, i) describe the same
  /// undirected edge.
  static SparseGraph build(int n, std::span<const WeightedEdge> edges) {
    if (n < 0) throw UsageError("graph: node count must be non-negative");
    std::vector<std::tuple<int, int, double>> canon;
    canon.reserve(edges.size());
    for (const auto& e : edges) {
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
        throw UsageError("graph: edge (" + std::to_string(e.u) + ", " +
                         std::to_string(e.v) + ") out of range for n=" +
                         std::to_string(n));
      if (!(e.weight > 0.0))
        throw UsageError("graph: non-positive weight on edge (" +
                         std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
      if (e.u == e.v) continue;
      canon.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v), e.weight);
    }
    std::sort(canon.begin(), canon.end());
    // merge duplicates by max weight
    std::vector<std::tuple<int, int, double>> merged;
    for (const auto& t : canon) {
      if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(t) &&
          std::get<1>(merged.back()) == std::get<1>(t)) {
        std::get<2>(merged.back()) =
            std::max(std::get<2>(merged.back()), std::get<2>(t));
      } else {
        merged.push_back(t);
      }
    }

    SparseGraph g;
    g.n_ = n;
    g.edge_count_ = merged.size();
    std::vector<int> deg(static_cast<std::size_t>(n), 0);
    for (const auto& [a, b, w] : merged) {
      (void)w;
      ++deg[a];
      ++deg[b];
    }
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i];
    g.neighbors_.resize(g.offsets_[n]);
    g.weights_.resize(g.offsets_[n]);
    // merged is sorted by (min, max): row i first receives its smaller
    // neighbors (ascending), then its larger ones (ascending), so every
    // neighbor list comes out sorted without a per-row sort.
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [a, b, w] : merged) {
      g.neighbors_[cursor[a]] = b;
      g.weights_[cursor[a]++] = w;
      g.neighbors_[cursor[b]] = a;
      g.weights_[cursor[b]++] = w;
    }
    return g;
  }

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edge_count_; }

  int degree(int u) const {
    return static_cast<int>(offsets_[u + 1] - offsets_[u]);
  }

  std::span<const int> neighbors(int u) const {
    return {neighbors_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }

  std::span<const double> weights(int u) const {
    return {weights_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }

  double weighted_degree(int u) const {
    double s = 0.0;
    for (double w : weights(u)) s += w;
    return s;
  }

  std::vector<WeightedEdge> edge_list() const {
    std::vector<WeightedEdge> out;
    out.reserve(edge_count_);
    for (int u = 0; u < n_; ++u) {
      auto nb = neighbors(u);
      auto ws = weights(u);
      for (std::size_t t = 0; t < nb.size(); ++t)
        if (u < nb[t]) out.push_back({u, nb[t], ws[t]});
    }
    return out;
  }

private:
  int n_ = 0;
  std::size_t edge_count_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<int> neighbors_;
  std::vector<double> weights_;
};

inline SparseGraph build_graph(int n, std::span<const WeightedEdge> edges) {
  return SparseGraph::build(n, edges);
}

/// Component labels in [0, c); nodes share a label iff connected.
/// Labels follow discovery order from ascending start nodes, so they are
/// deterministic for a given graph.
inline std::vector<int> connected_components(const SparseGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (label[s] != -1) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : g.neighbors(u)) {
        if (label[v] == -1) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

inline int num_components(const std::vector<int>& labels) {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

/// Relabels nodes: node i of g becomes node perm[i] of the result.
inline SparseGraph permute_graph(const SparseGraph& g,
                                 std::span<const int> perm) {
  std::vector<WeightedEdge> edges = g.edge_list();
  for (auto& e : edges) {
    e.u = perm[e.u];
    e.v = perm[e.v];
  }
  return SparseGraph::build(g.num_nodes(), edges);
}

/// Combinatorial Laplacian L = D - W with its degree vector and the component
/// labels of the underlying graph (the per-component constant vectors span
/// the nullspace; the spectral engine deflates against exactly those).
class Laplacian {
public:
  Laplacian() = default;

  explicit Laplacian(const SparseGraph& g) {
    const int n = g.num_nodes();
    degrees_ = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * g.num_edges() + n);
    for (int u = 0; u < n; ++u) {
      auto nb = g.neighbors(u);
      auto ws = g.weights(u);
      double d = 0.0;
      for (std::size_t t = 0; t < nb.size(); ++t) {
        trip.emplace_back(u, nb[t], -ws[t]);
        d += ws[t];
      }
      degrees_[u] = d;
      trip.emplace_back(u, u, d);
    }
    mat_.resize(n, n);
    mat_.setFromTriplets(trip.begin(), trip.end());
    mat_.makeCompressed();
    components_ = connected_components(g);
    num_components_ = num_components(components_);
  }

  int size() const { return static_cast<int>(mat_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return mat_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }
  const std::vector<int>& components() const { return components_; }
  int component_count() const { return num_components_; }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(mat_); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat_ * x; }

  /// x^T L x, the weighted sum of squared edge differences.
  double quadratic_form(const Eigen::VectorXd& x) const {
    return x.dot(mat_ * x);
  }

private:
  Eigen::SparseMatrix<double> mat_;
  Eigen::VectorXd degrees_;
  std::vector<int> components_;
  int num_components_ = 0;
};

inline Laplacian laplacian(const SparseGraph& g) { return Laplacian(g); }

enum class Propagation {
  symmetric_normalized, // D~^{-1/2} (A + I) D~^{-1/2}
  self_plus_neighbors,  // A + I, the raw aggregation sum
};

/// GCN propagation operator. Symmetric; with the normalized variant every
/// stored entry lies in (0, 1] and row i holds degree(i) + 1 entries.
class NormalizedAdjacency {
public:
  NormalizedAdjacency() = default;

  explicit NormalizedAdjacency(
      const SparseGraph& g,
      Propagation mode = Propagation::symmetric_normalized) {
    const int n = g.num_nodes();
    Eigen::VectorXd dtilde(n);
    for (int u = 0; u < n; ++u) dtilde[u] = g.weighted_degree(u) + 1.0;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * g.num_edges() + n);
    const bool norm = mode == Propagation::symmetric_normalized;
    for (int u = 0; u < n; ++u) {
      auto nb = g.neighbors(u);
      auto ws = g.weights(u);
      for (std::size_t t = 0; t < nb.size(); ++t) {
        double w = norm ? ws[t] / std::sqrt(dtilde[u] * dtilde[nb[t]]) : ws[t];
        trip.emplace_back(u, nb[t], w);
      }
      trip.emplace_back(u, u, norm ? 1.0 / dtilde[u] : 1.0);
    }
    mat_.resize(n, n);
    mat_.setFromTriplets(trip.begin(), trip.end());
    mat_.makeCompressed();
  }

  int size() const { return static_cast<int>(mat_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return mat_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(mat_); }

private:
  Eigen::SparseMatrix<double> mat_;
};

inline NormalizedAdjacency normalized_adjacency(
    const SparseGraph& g,
    Propagation mode = Propagation::symmetric_normalized) {
  return NormalizedAdjacency(g, mode);
}

} // namespace spade
