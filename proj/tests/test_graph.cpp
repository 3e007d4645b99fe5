#include <gtest/gtest.h>

#include "spade/graph.hpp"
#include "spade/knn.hpp"

#include "oracles.hpp"
#include "support.hpp"

using spade::build_graph;
using spade::SparseGraph;
using spade::WeightedEdge;

TEST(BuildGraph, PathP3) {
  std::vector<WeightedEdge> edges{{0, 1, 1.0}, {1, 2, 1.0}};
  SparseGraph g = build_graph(3, edges);
  EXPECT_EQ(g.num_nodes(), 3);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.degree(1), 2);
  ASSERT_EQ(g.neighbors(1).size(), 2u);
  EXPECT_EQ(g.neighbors(1)[0], 0);
  EXPECT_EQ(g.neighbors(1)[1], 2);
}

TEST(BuildGraph, DuplicateDirectionsMerge) {
  std::vector<WeightedEdge> edges{{0, 1, 1.0}, {1, 0, 1.0}};
  SparseGraph g = build_graph(2, edges);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.weights(0)[0], 1.0);
}

TEST(BuildGraph, DuplicatesKeepMaxWeight) {
  std::vector<WeightedEdge> edges{{0, 1, 1.0}, {1, 0, 3.0}, {0, 1, 2.0}};
  SparseGraph g = build_graph(2, edges);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.weights(0)[0], 3.0);
}

TEST(BuildGraph, SelfLoopDropped) {
  std::vector<WeightedEdge> edges{{0, 0, 1.0}};
  SparseGraph g = build_graph(2, edges);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.degree(0), 0);
}

TEST(BuildGraph, RejectsBadInput) {
  std::vector<WeightedEdge> oob{{0, 5, 1.0}};
  EXPECT_THROW(build_graph(3, oob), spade::UsageError);
  std::vector<WeightedEdge> nonpos{{0, 1, 0.0}};
  EXPECT_THROW(build_graph(3, nonpos), spade::UsageError);
  std::vector<WeightedEdge> neg{{0, 1, -2.0}};
  EXPECT_THROW(build_graph(3, neg), spade::UsageError);
}

TEST(BuildGraph, SymmetryOnRandomGraphs) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SparseGraph g = support::random_connected_graph(40, 2.0, seed);
    for (int u = 0; u < g.num_nodes(); ++u) {
      auto nb = g.neighbors(u);
      auto ws = g.weights(u);
      EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
      for (std::size_t t = 0; t < nb.size(); ++t) {
        int v = nb[t];
        EXPECT_NE(v, u);
        auto back = g.neighbors(v);
        auto it = std::lower_bound(back.begin(), back.end(), u);
        ASSERT_TRUE(it != back.end() && *it == u);
        EXPECT_DOUBLE_EQ(g.weights(v)[it - back.begin()], ws[t]);
      }
    }
  }
}

TEST(Laplacian, P2Matrix) {
  SparseGraph g = build_graph(2, std::vector<WeightedEdge>{{0, 1, 1.0}});
  Eigen::MatrixXd l = spade::laplacian(g).dense();
  Eigen::MatrixXd expect(2, 2);
  expect << 1, -1, -1, 1;
  EXPECT_TRUE(l.isApprox(expect, 0.0));
}

TEST(Laplacian, TriangleMatrix) {
  std::vector<WeightedEdge> edges{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
  Eigen::MatrixXd l = spade::laplacian(build_graph(3, edges)).dense();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_DOUBLE_EQ(l(i, j), i == j ? 2.0 : -1.0);
}

TEST(Laplacian, QuadraticFormMatchesOracle) {
  SparseGraph g = support::random_connected_graph(10, 1.5, 11);
  spade::Laplacian l = spade::laplacian(g);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = support::random_vector(10, 100 + t, -2.0, 2.0);
    double via_matrix = x.dot(l.apply(x));
    EXPECT_NEAR(via_matrix, oracle::quadratic_form(g, x), 1e-10);
  }
}

TEST(Laplacian, RowSumsZero) {
  for (std::uint64_t seed : {5u, 6u}) {
    SparseGraph g = support::random_connected_graph(30, 2.0, seed);
    Eigen::MatrixXd l = spade::laplacian(g).dense();
    Eigen::VectorXd sums = l.rowwise().sum();
    for (int i = 0; i < 30; ++i) EXPECT_NEAR(sums[i], 0.0, 1e-12);
  }
}

TEST(Laplacian, PositiveSemidefinite) {
  SparseGraph g = support::random_connected_graph(25, 2.0, 7);
  spade::Laplacian l = spade::laplacian(g);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = support::random_vector(25, 200 + t, -3.0, 3.0);
    EXPECT_GE(x.dot(l.apply(x)), -1e-10);
  }
}

TEST(Laplacian, CommutesWithPermutation) {
  SparseGraph g = support::random_connected_graph(20, 1.5, 9);
  std::vector<int> perm = support::random_permutation(20, 10);
  Eigen::MatrixXd l = spade::laplacian(g).dense();
  Eigen::MatrixXd lp = spade::laplacian(spade::permute_graph(g, perm)).dense();
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      EXPECT_NEAR(lp(perm[i], perm[j]), l(i, j), 1e-12);
}

TEST(NormalizedAdjacency, IsolatedNodeIsIdentity) {
  SparseGraph g = build_graph(1, std::vector<WeightedEdge>{});
  Eigen::MatrixXd a = spade::normalized_adjacency(g).dense();
  ASSERT_EQ(a.rows(), 1);
  EXPECT_DOUBLE_EQ(a(0, 0), 1.0);
}

TEST(NormalizedAdjacency, P2IsHalfEverywhere) {
  SparseGraph g = build_graph(2, std::vector<WeightedEdge>{{0, 1, 1.0}});
  Eigen::MatrixXd a = spade::normalized_adjacency(g).dense();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a(i, j), 0.5);
}

TEST(NormalizedAdjacency, MatchesDenseOracle) {
  for (std::uint64_t seed : {21u, 22u}) {
    SparseGraph g = support::random_connected_graph(50, 2.0, seed);
    Eigen::MatrixXd mine = spade::normalized_adjacency(g).dense();
    Eigen::MatrixXd ref = oracle::dense_normalized_adjacency(g);
    EXPECT_LT((mine - ref).cwiseAbs().maxCoeff(), 1e-12);
    // row sums agree with the oracle's row sums entry for entry
    EXPECT_LT(
        (mine.rowwise().sum() - ref.rowwise().sum()).cwiseAbs().maxCoeff(),
        1e-12);
  }
}

TEST(NormalizedAdjacency, EntryRangeAndCounts) {
  SparseGraph g = support::random_connected_graph(30, 2.0, 23);
  spade::NormalizedAdjacency a(g);
  const auto& m = a.matrix();
  for (int col = 0; col < m.outerSize(); ++col) {
    int count = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
      EXPECT_GT(it.value(), 0.0);
      EXPECT_LE(it.value(), 1.0);
      ++count;
    }
    EXPECT_EQ(count, g.degree(col) + 1);
  }
  Eigen::MatrixXd dense = a.dense();
  EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Components, PathIsOneComponent) {
  SparseGraph g =
      build_graph(3, std::vector<WeightedEdge>{{0, 1, 1.0}, {1, 2, 1.0}});
  auto labels = spade::connected_components(g);
  EXPECT_EQ(spade::num_components(labels), 1);
}

TEST(Components, TwoDisjointEdges) {
  SparseGraph g =
      build_graph(4, std::vector<WeightedEdge>{{0, 1, 1.0}, {2, 3, 1.0}});
  auto labels = spade::connected_components(g);
  EXPECT_EQ(spade::num_components(labels), 2);
  EXPECT_EQ(labels[0], labels[1]);
  EXPECT_EQ(labels[2], labels[3]);
  EXPECT_NE(labels[0], labels[2]);
}

TEST(Components, KnnCloudMatchesUnionFind) {
  Eigen::MatrixXd pts = support::random_points(100, 3, 31);
  SparseGraph g = spade::knn_graph(pts, {10, spade::Metric::euclidean});
  EXPECT_EQ(spade::connected_components(g),
            oracle::components_union_find(g));
}

TEST(Components, DiscoveryOrderLabels) {
  // labels are assigned in first-appearance order, so they are canonical
  SparseGraph g =
      build_graph(5, std::vector<WeightedEdge>{{2, 4, 1.0}, {1, 3, 1.0}});
  auto labels = spade::connected_components(g);
  EXPECT_EQ(labels[0], 0);
  EXPECT_EQ(labels[1], 1);
  EXPECT_EQ(labels[2], 2);
  EXPECT_EQ(labels[3], 1);
  EXPECT_EQ(labels[4], 2);
}
