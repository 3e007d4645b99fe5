#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spade/dataset.hpp"
#include "spade/graph.hpp"
#include "spade/rng.hpp"

// Deterministic instance generators shared by the unit tests and the
// acceptance suite. Everything is seeded through spade::rng so instances are
// identical across platforms and runs.

namespace support {

/// Connected graph: random spanning tree plus extra_per_node * n random
/// edges. Weights uniform in [0.5, 2.0] unless unit_weights.
inline spade::SparseGraph random_connected_graph(int n, double extra_per_node,
                                                 std::uint64_t seed,
                                                 bool unit_weights = false) {
  std::mt19937_64 gen(spade::rng::derive_seed(seed, 0x6a01));
  std::vector<spade::WeightedEdge> edges;
  auto weight = [&] {
    return unit_weights ? 1.0 : spade::rng::uniform(gen, 0.5, 2.0);
  };
  for (int i = 1; i < n; ++i) {
    int parent = static_cast<int>(spade::rng::uniform_index(gen, i));
    edges.push_back({parent, i, weight()});
  }
  const int extra = static_cast<int>(extra_per_node * n);
  for (int t = 0; t < extra; ++t) {
    int u = static_cast<int>(spade::rng::uniform_index(gen, n));
    int v = static_cast<int>(spade::rng::uniform_index(gen, n));
    if (u == v) continue;
    edges.push_back({u, v, weight()});
  }
  return spade::build_graph(n, edges);
}

/// Same edge set with every weight multiplied by c (exercises scaling laws).
inline spade::SparseGraph scale_weights(const spade::SparseGraph& g,
                                        double c) {
  std::vector<spade::WeightedEdge> edges = g.edge_list();
  for (auto& e : edges) e.weight *= c;
  return spade::build_graph(g.num_nodes(), edges);
}

/// Gaussian cloud, N x dim.
inline Eigen::MatrixXd random_points(int n, int dim, std::uint64_t seed,
                                     double spread = 1.0) {
  std::mt19937_64 gen(spade::rng::derive_seed(seed, 0x9c1d));
  Eigen::MatrixXd pts(n, dim);
  // Box-Muller on the portable uniform stream keeps the values
  // implementation-independent (std::normal_distribution is not).
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) {
      double u1 = spade::rng::uniform01(gen);
      double u2 = spade::rng::uniform01(gen);
      u1 = u1 <= 0.0 ? 1e-300 : u1;
      pts(i, j) = spread * std::sqrt(-2.0 * std::log(u1)) *
                  std::cos(2.0 * M_PI * u2);
    }
  return pts;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed,
                                     double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(spade::rng::derive_seed(seed, 0x3b7f));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = spade::rng::uniform(gen, lo, hi);
  return m;
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed,
                                     double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(spade::rng::derive_seed(seed, 0x51e9));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = spade::rng::uniform(gen, lo, hi);
  return v;
}

inline std::vector<int> random_permutation(int n, std::uint64_t seed) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 gen(spade::rng::derive_seed(seed, 0x77aa));
  spade::rng::shuffle(p, gen);
  return p;
}

/// Well-separated Gaussian clusters with ring edges inside each cluster and
/// a couple of cross edges; linearly separable by design. Cluster c is
/// centered at 6 * e_{c mod dim}, so the means stay mutually orthogonal
/// (clusters <= dim), every class has comparable feature magnitude, and the
/// classes remain separable after row normalization.
inline spade::Dataset cluster_dataset(int clusters, int per_cluster, int dim,
                                      std::uint64_t seed,
                                      double spread = 0.5) {
  const int n = clusters * per_cluster;
  spade::Dataset ds;
  ds.features = random_points(n, dim, seed, spread);
  ds.labels.resize(n);
  std::vector<spade::WeightedEdge> edges;
  for (int c = 0; c < clusters; ++c) {
    const int base = c * per_cluster;
    for (int t = 0; t < per_cluster; ++t) {
      int i = base + t;
      ds.labels[i] = c;
      ds.features(i, c % dim) += 6.0; // shift cluster mean
      edges.push_back({i, base + (t + 1) % per_cluster, 1.0});
    }
  }
  for (int c = 0; c + 1 < clusters; ++c) // sparse cross links
    edges.push_back({c * per_cluster + 1, (c + 1) * per_cluster + 2, 1.0});
  ds.graph = spade::build_graph(n, edges);
  for (int c = 0; c < clusters; ++c)
    ds.class_names.push_back("cluster_" + std::to_string(c));
  return ds;
}

/// Directory holding cora.content/cora.cites, or "" when unavailable.
/// Checked: $SPADE_CORA_DIR, then ./data/cora, then ../data/cora.
inline std::string cora_dir() {
  auto has_files = [](const std::filesystem::path& dir) {
    std::error_code ec;
    return std::filesystem::is_regular_file(dir / "cora.content", ec) &&
           std::filesystem::is_regular_file(dir / "cora.cites", ec);
  };
  if (const char* env = std::getenv("SPADE_CORA_DIR");
      env != nullptr && *env != '\0') {
    if (has_files(env)) return env;
    return "";
  }
  for (const char* cand : {"data/cora", "../data/cora"})
    if (has_files(cand)) return cand;
#ifdef SPADE_CORA_FALLBACK
  if (has_files(SPADE_CORA_FALLBACK)) return SPADE_CORA_FALLBACK;
#endif
  return "";
}

/// Writes content to a file under dir and returns the full path.
inline std::string write_file(const std::string& dir, const std::string& name,
                              const std::string& content) {
  std::filesystem::path p = std::filesystem::path(dir) / name;
  std::ofstream out(p);
  out << content;
  out.close();
  return p.string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace support
