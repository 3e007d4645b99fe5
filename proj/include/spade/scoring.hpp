#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spade/errors.hpp"
#include "spade/format.hpp"
#include "spade/graph.hpp"

// Per-node vulnerability scores from the eigensubspace matrix: the mean
// squared subspace-projected difference across a node's input-graph
// neighbors. Low score = edges barely distorted by the transformation =
// robust node.

namespace spade {

struct SpadeScores {
  Eigen::VectorXd scores;            // length N, non-negative
  std::vector<int> ranking;          // ascending by (score, node index)
  std::vector<std::uint8_t> is_isolated; // no incident input edges

  int size() const { return static_cast<int>(scores.size()); }

  /// rank[i] = position of node i in the ascending ranking.
  std::vector<int> ranks() const {
    std::vector<int> r(ranking.size());
    for (std::size_t pos = 0; pos < ranking.size(); ++pos)
      r[ranking[pos]] = static_cast<int>(pos);
    return r;
  }
};

struct RobustPartition {
  std::vector<int> robust_ids; // sorted ascending
  std::vector<int> rest_ids;   // sorted ascending, complement
  double fraction = 0.0;
};

/// score(i) = mean over input-graph neighbors j of
/// || V_k^T (e_i - e_j) ||^2 = || vk.row(i) - vk.row(j) ||^2.
/// Isolated nodes have no evidence of edge distortion; they get score 0 and
/// an explicit flag.
inline SpadeScores spade_scores(const Eigen::MatrixXd& vk,
                                const SparseGraph& g_in) {
  const int n = g_in.num_nodes();
  if (static_cast<int>(vk.rows()) != n)
    throw UsageError("spade_scores: V_k has " + std::to_string(vk.rows()) +
                     " rows, graph has " + std::to_string(n) + " nodes");
  SpadeScores out;
  out.scores.resize(n);
  out.is_isolated.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    auto nb = g_in.neighbors(i);
    if (nb.empty()) {
      out.scores[i] = 0.0;
      out.is_isolated[i] = 1;
      continue;
    }
    double acc = 0.0;
    for (int j : nb) acc += (vk.row(i) - vk.row(j)).squaredNorm();
    out.scores[i] = acc / static_cast<double>(nb.size());
  }
  out.ranking.resize(n);
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](int a, int b) { return out.scores[a] < out.scores[b]; });
  return out;
}

/// Half-away-from-zero rounding for the subset size, so the selected count is
/// reproducible from the fraction alone.
inline int robust_count(double fraction, int n) {
  return static_cast<int>(std::llround(fraction * n));
}

/// Lowest round(fraction * N) scores form the robust set; ties fall back to
/// node index through the ranking.
inline RobustPartition select_robust(const SpadeScores& s, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw UsageError("select_robust: fraction must be in (0, 1], got " +
                     std::to_string(fraction));
  const int n = s.size();
  const int take = robust_count(fraction, n);
  RobustPartition p;
  p.fraction = fraction;
  p.robust_ids.assign(s.ranking.begin(), s.ranking.begin() + take);
  p.rest_ids.assign(s.ranking.begin() + take, s.ranking.end());
  std::sort(p.robust_ids.begin(), p.robust_ids.end());
  std::sort(p.rest_ids.begin(), p.rest_ids.end());
  return p;
}

/// CSV export: node_id,score,rank,is_isolated. Full double precision so a
/// re-run can be compared byte for byte.
inline std::string scores_to_csv(const SpadeScores& s) {
  std::ostringstream out;
  out << "node_id,score,rank,is_isolated\n";
  std::vector<int> rank = s.ranks();
  for (int i = 0; i < s.size(); ++i)
    out << i << ',' << format_double(s.scores[i]) << ',' << rank[i] << ','
        << int(s.is_isolated[i]) << '\n';
  return out.str();
}

} // namespace spade
