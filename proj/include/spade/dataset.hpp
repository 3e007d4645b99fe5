#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "spade/errors.hpp"
#include "spade/graph.hpp"
#include "spade/rng.hpp"

// Dataset loading: the raw LINQS Cora distribution (cora.content/cora.cites)
// and a generic JSON container for everything else. Loads are pure and the
// resulting Dataset is immutable.

namespace spade {

struct Dataset {
  Eigen::MatrixXd features;             // N x d
  std::vector<int> labels;              // class indices in [0, C)
  SparseGraph graph;                    // over the N nodes
  std::vector<std::string> class_names; // C entries
  bool features_l1_normalized = false;

  int num_nodes() const { return static_cast<int>(features.rows()); }
  int num_features() const { return static_cast<int>(features.cols()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // min_classes=1 admits degenerate corpora (e.g. a one-paper content file);
  // classification work downstream always revalidates with the default.
  void validate(int min_classes = 2) const {
    const int n = num_nodes();
    if (static_cast<int>(labels.size()) != n)
      throw DataError("dataset: label count != feature row count");
    if (graph.num_nodes() != n)
      throw DataError("dataset: graph node count != feature row count");
    const int c = num_classes();
    if (c < min_classes)
      throw DataError("dataset: need at least " + std::to_string(min_classes) +
                      " classes, got " + std::to_string(c));
    for (int l : labels)
      if (l < 0 || l >= c)
        throw DataError("dataset: label " + std::to_string(l) +
                        " outside [0, " + std::to_string(c) + ")");
    if (!features.allFinite())
      throw DataError("dataset: features contain NaN or Inf");
  }
};

struct Split {
  std::vector<int> train_ids; // sorted
  std::vector<int> test_ids;  // sorted
  std::uint64_t seed = 0;
  int per_class_train = 0;
};

struct LoadOptions {
  /// Scale every feature row to unit L1 norm (zero rows stay zero).
  bool normalize_features = true;
};

namespace detail {

inline void l1_normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = m.row(i).cwiseAbs().sum();
    if (s > 0.0) m.row(i) /= s;
  }
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace detail

/// Loads the raw LINQS Cora distribution.
///
/// cora.content: <paper_id> <binary fields...> <class_label> per line,
/// tab-separated. cora.cites: <cited_id> <citing_id> per line. Node order is
/// the order of appearance in the content file; citation direction is
/// discarded and edges get unit weight.
inline Dataset load_cora(const std::string& content_path,
                         const std::string& cites_path,
                         const LoadOptions& opts = {}) {
  std::ifstream content(content_path);
  if (!content) throw DataError("cannot open " + content_path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_strings;
  std::unordered_map<std::string, int> id_to_index;
  std::vector<std::string> ids;
  std::string line;
  int lineno = 0;
  int d = -1;
  while (std::getline(content, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() < 3)
      throw DataError(content_path + ":" + std::to_string(lineno) +
                      ": expected <id> <features...> <label>");
    int nfeat = static_cast<int>(fields.size()) - 2;
    if (d == -1)
      d = nfeat;
    else if (nfeat != d)
      throw DataError(content_path + ":" + std::to_string(lineno) + ": has " +
                      std::to_string(nfeat) + " feature fields, expected " +
                      std::to_string(d));
    const std::string& id = fields.front();
    if (!id_to_index.emplace(id, static_cast<int>(ids.size())).second)
      throw DataError(content_path + ":" + std::to_string(lineno) +
                      ": duplicate paper id " + id);
    ids.push_back(id);
    std::vector<double> feat(d);
    for (int j = 0; j < d; ++j) {
      try {
        std::size_t pos = 0;
        feat[j] = std::stod(fields[j + 1], &pos);
        if (pos != fields[j + 1].size()) throw std::invalid_argument("trail");
      } catch (const std::exception&) {
        throw DataError(content_path + ":" + std::to_string(lineno) +
                        ": malformed feature field '" + fields[j + 1] + "'");
      }
    }
    rows.push_back(std::move(feat));
    label_strings.push_back(fields.back());
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw DataError(content_path + ": empty content file");

  // class indices by sorted label name, so they do not depend on row order
  std::map<std::string, int> class_index;
  for (const auto& s : label_strings) class_index.emplace(s, 0);
  {
    int next = 0;
    for (auto& [name, idx] : class_index) idx = next++;
  }

  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) ds.labels[i] = class_index.at(label_strings[i]);
  ds.class_names.resize(class_index.size());
  for (const auto& [name, idx] : class_index) ds.class_names[idx] = name;

  std::ifstream cites(cites_path);
  if (!cites) throw DataError("cannot open " + cites_path);
  std::vector<WeightedEdge> edges;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw DataError(cites_path + ":" + std::to_string(lineno) +
                      ": expected <cited_id> <citing_id>");
    auto a = id_to_index.find(fields[0]);
    if (a == id_to_index.end())
      throw DataError(cites_path + ":" + std::to_string(lineno) +
                      ": unknown paper id " + fields[0]);
    auto b = id_to_index.find(fields[1]);
    if (b == id_to_index.end())
      throw DataError(cites_path + ":" + std::to_string(lineno) +
                      ": unknown paper id " + fields[1]);
    if (a->second != b->second) edges.push_back({a->second, b->second, 1.0});
  }
  ds.graph = SparseGraph::build(n, edges);

  if (opts.normalize_features) {
    detail::l1_normalize_rows(ds.features);
    ds.features_l1_normalized = true;
  }
  ds.validate(1);
  return ds;
}

/// Generic dataset JSON: {"n", "d", "c", "features", "labels", "edges"} with
/// optional "class_names". No NaN/Inf anywhere.
inline Dataset load_generic(const std::string& path,
                            const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": JSON parse error: " + e.what());
  }
  try {
    const int n = j.at("n").get<int>();
    const int d = j.at("d").get<int>();
    const int c = j.at("c").get<int>();
    if (n < 1 || d < 1 || c < 2)
      throw DataError(path + ": invalid dimensions n/d/c");
    Dataset ds;
    const auto& feats = j.at("features");
    if (static_cast<int>(feats.size()) != n)
      throw DataError(path + ": features has " + std::to_string(feats.size()) +
                      " rows, expected " + std::to_string(n));
    ds.features.resize(n, d);
    for (int i = 0; i < n; ++i) {
      const auto& row = feats.at(i);
      if (static_cast<int>(row.size()) != d)
        throw DataError(path + ": feature row " + std::to_string(i) +
                        " has wrong length");
      for (int k = 0; k < d; ++k) {
        if (!row.at(k).is_number())
          throw DataError(path + ": non-numeric feature at row " +
                          std::to_string(i));
        ds.features(i, k) = row.at(k).get<double>();
      }
    }
    const auto& labels = j.at("labels");
    if (static_cast<int>(labels.size()) != n)
      throw DataError(path + ": labels length != n");
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      int l = labels.at(i).get<int>();
      if (l < 0 || l >= c)
        throw DataError(path + ": label " + std::to_string(l) + " at node " +
                        std::to_string(i) + " outside [0, " +
                        std::to_string(c) + ")");
      ds.labels[i] = l;
    }
    if (j.contains("class_names")) {
      ds.class_names = j.at("class_names").get<std::vector<std::string>>();
      if (static_cast<int>(ds.class_names.size()) != c)
        throw DataError(path + ": class_names length != c");
    } else {
      for (int k = 0; k < c; ++k)
        ds.class_names.push_back("class_" + std::to_string(k));
    }
    std::vector<WeightedEdge> edges;
    for (const auto& e : j.at("edges")) {
      if (e.size() != 3)
        throw DataError(path + ": edge entries must be [i, j, weight]");
      edges.push_back(
          {e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    }
    try {
      ds.graph = SparseGraph::build(n, edges);
    } catch (const UsageError& e) {
      throw DataError(path + ": " + e.what());
    }
    if (opts.normalize_features) {
      detail::l1_normalize_rows(ds.features);
      ds.features_l1_normalized = true;
    }
    ds.validate();
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": schema violation: " + e.what());
  }
}

/// Writes the canonical generic JSON form: sorted keys, edges as sorted
/// [i, j, w] with i < j, shortest round-trip number formatting. Loading and
/// re-writing a canonical file is byte-identical.
inline void write_generic(const Dataset& ds, const std::string& path) {
  ds.validate();
  nlohmann::json j;
  const int n = ds.num_nodes();
  const int d = ds.num_features();
  j["n"] = n;
  j["d"] = d;
  j["c"] = ds.num_classes();
  j["class_names"] = ds.class_names;
  auto feats = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < d; ++k) row.push_back(ds.features(i, k));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  j["labels"] = ds.labels;
  auto edges = nlohmann::json::array();
  for (const auto& e : ds.graph.edge_list())
    edges.push_back(nlohmann::json::array({e.u, e.v, e.weight}));
  j["edges"] = std::move(edges);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << "\n";
}

/// Deterministic per-class train sampling: exactly per_class_train train
/// nodes from every class, all remaining nodes are test nodes.
inline Split make_split(const Dataset& ds, int per_class_train,
                        std::uint64_t seed) {
  if (per_class_train < 1)
    throw UsageError("split: per-class train count must be >= 1");
  const int c = ds.num_classes();
  std::vector<std::vector<int>> by_class(c);
  for (int i = 0; i < ds.num_nodes(); ++i)
    by_class[ds.labels[i]].push_back(i);
  for (int k = 0; k < c; ++k)
    if (static_cast<int>(by_class[k].size()) < per_class_train)
      throw UsageError("split: class " + ds.class_names[k] + " has only " +
                       std::to_string(by_class[k].size()) + " nodes, need " +
                       std::to_string(per_class_train));
  Split s;
  s.seed = seed;
  s.per_class_train = per_class_train;
  std::mt19937_64 gen(seed);
  for (int k = 0; k < c; ++k) {
    rng::shuffle(by_class[k], gen);
    for (int t = 0; t < per_class_train; ++t)
      s.train_ids.push_back(by_class[k][t]);
    for (std::size_t t = per_class_train; t < by_class[k].size(); ++t)
      s.test_ids.push_back(by_class[k][t]);
  }
  std::sort(s.train_ids.begin(), s.train_ids.end());
  std::sort(s.test_ids.begin(), s.test_ids.end());
  return s;
}

} // namespace spade
