#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spade/dataset.hpp"
#include "spade/errors.hpp"
#include "spade/format.hpp"
#include "spade/gcn.hpp"
#include "spade/graph.hpp"
#include "spade/knn.hpp"
#include "spade/rng.hpp"
#include "spade/scoring.hpp"
#include "spade/spectral.hpp"

// The full multi-level procedure. Stage one: train a GCN on the given graph,
// build a KNN graph of its hidden embeddings, solve the Laplacian pencil and
// score every node. Stage two: keep the lowest-scoring fraction, train a
// fresh GCN on a KNN subgraph of just those nodes, and hand every remaining
// node to the nearest class centroid.

namespace spade {

enum class Space { raw_features, embeddings };
enum class GInputSource { given_graph, knn_features };

inline std::string to_string(Space s) {
  return s == Space::raw_features ? "raw_features" : "embeddings";
}

inline Space space_from_string(const std::string& s) {
  if (s == "raw_features") return Space::raw_features;
  if (s == "embeddings") return Space::embeddings;
  throw UsageError("unknown space '" + s + "' (raw_features|embeddings)");
}

inline std::string to_string(GInputSource s) {
  return s == GInputSource::given_graph ? "given_graph" : "knn_features";
}

inline GInputSource g_input_source_from_string(const std::string& s) {
  if (s == "given_graph") return GInputSource::given_graph;
  if (s == "knn_features") return GInputSource::knn_features;
  throw UsageError("unknown input-graph source '" + s +
                   "' (given_graph|knn_features)");
}

struct PipelineConfig {
  double robust_fraction = 0.40;
  int knn_k = 10;
  int spade_k = 0; // 0 = one eigenpair per class
  Space subgraph_space = Space::raw_features;
  Space centroid_space = Space::raw_features;
  GInputSource g_input_source = GInputSource::given_graph;
  Metric metric = Metric::euclidean;
  GcnHyperparams gcn;
  std::uint64_t seed = 0;

  int resolve_spade_k(int num_classes) const {
    return spade_k > 0 ? spade_k : num_classes;
  }
  void validate() const {
    if (!(robust_fraction > 0.0) || robust_fraction > 1.0)
      throw UsageError("config: robust fraction must be in (0, 1]");
    if (knn_k < 1) throw UsageError("config: knn_k must be >= 1");
    if (spade_k < 0) throw UsageError("config: spade_k must be >= 1 (0 = C)");
  }
};

namespace detail {

/// Wall-clock laps accumulated under stage names. Timing is reported but
/// never participates in determinism comparisons.
class StageTimer {
public:
  void lap(const std::string& name) {
    auto now = std::chrono::steady_clock::now();
    seconds_[name] += std::chrono::duration<double>(now - mark_).count();
    mark_ = now;
  }
  const std::map<std::string, double>& seconds() const { return seconds_; }

private:
  std::chrono::steady_clock::time_point mark_ =
      std::chrono::steady_clock::now();
  std::map<std::string, double> seconds_;
};

struct TrainedGcn {
  GcnModel model;
  TrainTrace trace;
  GcnForward activations;
  std::vector<int> predictions;
  double test_accuracy = 0.0;
};

/// Baseline protocol: GCN on the full given graph, evaluated on test_ids.
inline TrainedGcn train_on_given_graph(const Dataset& ds, const Split& split,
                                       const PipelineConfig& cfg) {
  NormalizedAdjacency a_hat(ds.graph);
  GcnModel init = init_model(ds.num_features(), cfg.gcn.hidden,
                             ds.num_classes(), cfg.seed, cfg.gcn);
  TrainedGcn out;
  auto [model, trace] =
      train(std::move(init), a_hat, ds.features, ds.labels, split.train_ids,
            cfg.gcn);
  out.model = std::move(model);
  out.trace = std::move(trace);
  out.activations = forward(out.model, a_hat, ds.features);
  out.predictions = predict(out.model, a_hat, ds.features);
  out.test_accuracy = accuracy(out.predictions, ds.labels, split.test_ids);
  return out;
}

} // namespace detail

struct StageOne {
  GcnModel model;
  TrainTrace trace;
  Eigen::MatrixXd embeddings; // N x hidden, inference-mode hidden layer
  std::vector<int> baseline_predictions;
  double baseline_accuracy = 0.0;
  SparseGraph g_input;
  SparseGraph g_output;
  EigenSubspace subspace;
  SpadeScores scores;
  std::map<std::string, double> timing;
};

inline double run_baseline(const Dataset& ds, const Split& split,
                           const PipelineConfig& cfg) {
  cfg.validate();
  return detail::train_on_given_graph(ds, split, cfg).test_accuracy;
}

/// Embed, build the output KNN graph, solve the pencil, score. The split is
/// required because the embedding model follows the baseline training
/// protocol.
inline StageOne run_stage_one(const Dataset& ds, const Split& split,
                              const PipelineConfig& cfg) {
  cfg.validate();
  detail::StageTimer timer;
  StageOne s;
  detail::TrainedGcn base = detail::train_on_given_graph(ds, split, cfg);
  s.model = std::move(base.model);
  s.trace = std::move(base.trace);
  s.embeddings = std::move(base.activations.hidden);
  s.baseline_predictions = std::move(base.predictions);
  s.baseline_accuracy = base.test_accuracy;
  timer.lap("train_baseline");

  s.g_input = cfg.g_input_source == GInputSource::given_graph
                  ? ds.graph
                  : knn_graph(ds.features, {cfg.knn_k, cfg.metric});
  s.g_output = knn_graph(s.embeddings, {cfg.knn_k, cfg.metric});
  timer.lap("knn_output");

  s.subspace = pencil_topk(laplacian(s.g_input), laplacian(s.g_output),
                           cfg.resolve_spade_k(ds.num_classes()));
  timer.lap("pencil");
  s.scores = spade_scores(s.subspace.v_k_matrix, s.g_input);
  timer.lap("spade");
  s.timing = timer.seconds();
  return s;
}

inline std::pair<EigenSubspace, SpadeScores> evaluate_robustness(
    const Dataset& ds, const Split& split, const PipelineConfig& cfg) {
  StageOne s = run_stage_one(ds, split, cfg);
  return {std::move(s.subspace), std::move(s.scores)};
}

/// Per-class mean vectors. A class nobody contributes to has count 0 and an
/// undefined (zero-filled) row; that is data here, the pipeline decides
/// whether it is an error.
struct Centroids {
  Eigen::MatrixXd means;   // C x dim
  std::vector<int> counts; // per class
  int num_classes() const { return static_cast<int>(counts.size()); }
  bool defined(int c) const { return counts[c] > 0; }
};

inline Centroids compute_centroids(const Eigen::MatrixXd& vectors,
                                   const std::vector<int>& assignments,
                                   int num_classes) {
  if (static_cast<Eigen::Index>(assignments.size()) != vectors.rows())
    throw UsageError("centroids: one assignment per vector required");
  if (num_classes < 1) throw UsageError("centroids: need at least one class");
  Centroids c;
  c.means = Eigen::MatrixXd::Zero(num_classes, vectors.cols());
  c.counts.assign(num_classes, 0);
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    int a = assignments[i];
    if (a < 0 || a >= num_classes)
      throw UsageError("centroids: assignment " + std::to_string(a) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    c.means.row(a) += vectors.row(i);
    ++c.counts[a];
  }
  for (int m = 0; m < num_classes; ++m)
    if (c.counts[m] > 0) c.means.row(m) /= static_cast<double>(c.counts[m]);
  return c;
}

/// argmin Euclidean distance over defined centroids; ties go to the lowest
/// class index (strict < on ascending class scan).
inline int assign_nearest(const Centroids& c, const Eigen::RowVectorXd& v) {
  int best = -1;
  double best_d = 0.0;
  for (int m = 0; m < c.num_classes(); ++m) {
    if (!c.defined(m)) continue;
    double d = (v - c.means.row(m)).squaredNorm();
    if (best < 0 || d < best_d) {
      best = m;
      best_d = d;
    }
  }
  if (best < 0) throw UsageError("assign_nearest: all centroids undefined");
  return best;
}

struct NodeRecord {
  int node_id = 0;
  bool is_train = false;
  bool is_robust = false;
  double spade_score = 0.0;
  int pred = -1;
  int label = -1;
};

struct PipelineReport {
  double baseline_accuracy = 0.0;
  double robust_accuracy = 0.0;  // stage-two GCN on robust test nodes
  double rest_accuracy = 0.0;    // centroid assignment on the others
  double combined_accuracy = 0.0;
  int robust_count = 0;
  int robust_test_count = 0;
  int rest_test_count = 0;
  PipelineConfig config;
  Split split;
  std::vector<NodeRecord> nodes; // one per node, id order
  std::map<std::string, double> timing;
};

/// Prediction dump; `combined_accuracy` is recomputable from the test rows.
inline std::string report_to_csv(const PipelineReport& r) {
  std::ostringstream out;
  out << "node_id,split,is_robust,spade_score,pred,label,source\n";
  for (const NodeRecord& n : r.nodes)
    out << n.node_id << ',' << (n.is_train ? "train" : "test") << ','
        << int(n.is_robust) << ',' << format_double(n.spade_score) << ','
        << n.pred << ',' << n.label << ','
        << (n.is_robust ? "gnn" : "centroid") << '\n';
  return out.str();
}

namespace detail {

/// Hidden embedding of one outside node appended to the robust subgraph at
/// inference: it links to its knn_k nearest robust nodes (unit weights);
/// existing edges and trained weights are untouched. Only the appended row of
/// A_hat matters for its own hidden activation, so nothing is re-solved.
inline Eigen::RowVectorXd embed_appended(const GcnModel& model,
                                         const SparseGraph& sub,
                                         const Eigen::MatrixXd& xw0,
                                         const Eigen::RowVectorXd& x_u,
                                         const Eigen::MatrixXd& p_sub,
                                         const Eigen::RowVectorXd& p_u,
                                         int k, Metric metric) {
  const int r = static_cast<int>(p_sub.rows());
  const double u_norm = p_u.norm();
  std::vector<std::pair<double, int>> cand(r);
  for (int j = 0; j < r; ++j) {
    double d;
    if (metric == Metric::euclidean) {
      d = (p_u - p_sub.row(j)).squaredNorm();
    } else {
      double denom = u_norm * p_sub.row(j).norm();
      d = denom == 0.0 ? 1.0 : 1.0 - p_u.dot(p_sub.row(j)) / denom;
    }
    cand[j] = {d, j};
  }
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
  const double du = k + 1.0;
  Eigen::RowVectorXd z = (x_u * model.w0) / du;
  for (int t = 0; t < k; ++t) {
    int j = cand[t].second;
    z += xw0.row(j) / std::sqrt(du * (sub.weighted_degree(j) + 2.0));
  }
  return z.cwiseMax(0.0);
}

inline std::vector<std::uint8_t> membership_mask(int n,
                                                 const std::vector<int>& ids) {
  std::vector<std::uint8_t> mask(n, 0);
  for (int i : ids) mask[i] = 1;
  return mask;
}

} // namespace detail

/// Stage two on precomputed stage-one artifacts. Robust subset by ascending
/// score, KNN subgraph in cfg.subgraph_space, fresh GCN on the robust nodes'
/// raw features, centroids from robust nodes (true labels when in the train
/// set, stage-two predictions otherwise), nearest-centroid assignment for the
/// rest.
inline PipelineReport run_stage_two(const Dataset& ds, const Split& split,
                                    const PipelineConfig& cfg,
                                    const StageOne& s1) {
  cfg.validate();
  detail::StageTimer timer;
  const int n = ds.num_nodes();
  const int c = ds.num_classes();
  RobustPartition part = select_robust(s1.scores, cfg.robust_fraction);
  const int r = static_cast<int>(part.robust_ids.size());
  if (r < 2)
    throw UsageError("robust subset has " + std::to_string(r) +
                     " nodes; raise the robust fraction");

  std::vector<std::uint8_t> in_train = detail::membership_mask(n, split.train_ids);
  std::vector<std::uint8_t> is_robust =
      detail::membership_mask(n, part.robust_ids);

  // every class that reaches stage two must still be trainable there
  {
    std::vector<std::uint8_t> present(c, 0), trainable(c, 0);
    for (int i : part.robust_ids) {
      present[ds.labels[i]] = 1;
      if (in_train[i]) trainable[ds.labels[i]] = 1;
    }
    std::string missing;
    for (int m = 0; m < c; ++m)
      if (present[m] && !trainable[m])
        missing += (missing.empty() ? "" : ", ") + ds.class_names[m];
    if (!missing.empty())
      throw UsageError(
          "robust subset has no train node for class(es) " + missing +
          "; raise the robust fraction or use a different split seed");
  }

  Eigen::MatrixXd x_sub(r, ds.num_features());
  std::vector<int> labels_sub(r);
  std::vector<int> train_pos;
  for (int t = 0; t < r; ++t) {
    int i = part.robust_ids[t];
    x_sub.row(t) = ds.features.row(i);
    labels_sub[t] = ds.labels[i];
    if (in_train[i]) train_pos.push_back(t);
  }
  const Eigen::MatrixXd& space_all =
      cfg.subgraph_space == Space::raw_features ? ds.features : s1.embeddings;
  Eigen::MatrixXd p_sub(r, space_all.cols());
  for (int t = 0; t < r; ++t) p_sub.row(t) = space_all.row(part.robust_ids[t]);

  SparseGraph sub = knn_graph(p_sub, {cfg.knn_k, cfg.metric});
  timer.lap("subgraph_knn");

  NormalizedAdjacency a_sub(sub);
  GcnModel init2 =
      init_model(ds.num_features(), cfg.gcn.hidden, c,
                 rng::derive_seed(cfg.seed, 0x57a6e2), cfg.gcn);
  auto [model2, trace2] =
      train(std::move(init2), a_sub, x_sub, labels_sub, train_pos, cfg.gcn);
  std::vector<int> preds_sub = predict(model2, a_sub, x_sub);
  timer.lap("stage_two_train");

  // centroid-space vectors for the robust nodes and a getter for the rest
  Eigen::MatrixXd vec_robust;
  Eigen::MatrixXd xw0; // only for the embeddings ablation
  if (cfg.centroid_space == Space::raw_features) {
    vec_robust = x_sub;
  } else {
    vec_robust = forward(model2, a_sub, x_sub).hidden;
    xw0 = x_sub * model2.w0;
  }
  std::vector<int> centroid_labels(r);
  for (int t = 0; t < r; ++t)
    centroid_labels[t] = in_train[part.robust_ids[t]] ? labels_sub[t]
                                                      : preds_sub[t];
  Centroids centroids = compute_centroids(vec_robust, centroid_labels, c);
  {
    std::string missing;
    for (int m = 0; m < c; ++m)
      if (!centroids.defined(m))
        missing += (missing.empty() ? "" : ", ") + ds.class_names[m];
    if (!missing.empty())
      throw UsageError("no robust representative for class(es) " + missing +
                       ", centroid undefined; raise the robust fraction");
  }
  timer.lap("centroids");

  std::vector<int> final_pred(n, -1);
  for (int t = 0; t < r; ++t) final_pred[part.robust_ids[t]] = preds_sub[t];
  for (int u : part.rest_ids) {
    Eigen::RowVectorXd v;
    if (cfg.centroid_space == Space::raw_features)
      v = ds.features.row(u);
    else
      v = detail::embed_appended(model2, sub, xw0, ds.features.row(u), p_sub,
                                 space_all.row(u), cfg.knn_k, cfg.metric);
    final_pred[u] = assign_nearest(centroids, v);
  }
  timer.lap("assign");

  PipelineReport rep;
  rep.baseline_accuracy = s1.baseline_accuracy;
  rep.config = cfg;
  rep.split = split;
  rep.robust_count = r;
  int robust_correct = 0, rest_correct = 0;
  for (int i : split.test_ids) {
    const bool correct = final_pred[i] == ds.labels[i];
    if (is_robust[i]) {
      ++rep.robust_test_count;
      robust_correct += correct;
    } else {
      ++rep.rest_test_count;
      rest_correct += correct;
    }
  }
  rep.robust_accuracy = rep.robust_test_count
                            ? double(robust_correct) / rep.robust_test_count
                            : 0.0;
  rep.rest_accuracy =
      rep.rest_test_count ? double(rest_correct) / rep.rest_test_count : 0.0;
  const int total_test = rep.robust_test_count + rep.rest_test_count;
  rep.combined_accuracy =
      total_test ? double(robust_correct + rest_correct) / total_test : 0.0;

  rep.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    NodeRecord& rec = rep.nodes[i];
    rec.node_id = i;
    rec.is_train = in_train[i];
    rec.is_robust = is_robust[i];
    rec.spade_score = s1.scores.scores[i];
    rec.pred = final_pred[i];
    rec.label = ds.labels[i];
  }
  rep.timing = s1.timing;
  for (const auto& [k, v] : timer.seconds()) rep.timing[k] += v;
  return rep;
}

inline PipelineReport run_robust_pipeline(const Dataset& ds,
                                          const Split& split,
                                          const PipelineConfig& cfg) {
  StageOne s1 = run_stage_one(ds, split, cfg);
  return run_stage_two(ds, split, cfg, s1);
}

} // namespace spade
