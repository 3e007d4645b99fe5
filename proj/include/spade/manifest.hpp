#pragma once

#include <cstdint>
#include <cstring>
#include <ctime>
#include <string>

#include <json.hpp>

#include "spade/dataset.hpp"
#include "spade/pipeline.hpp"

// Artifact plumbing: every report embeds a manifest describing exactly what
// produced it — the command, a content hash of the dataset, the full config
// and the tool version. Identical manifests imply identical non-timing
// output bytes; the timestamp is the one informational exception and lives
// under a well-known key so determinism checks can strip it.

namespace spade {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

/// FNV-1a, 64-bit. Not cryptographic; collision risk is irrelevant for
/// "did the inputs change" bookkeeping.
class Fnv1a64 {
public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ull;
    }
  }
  void update_string(const std::string& s) {
    update(s.data(), s.size());
    update("\0", 1); // length framing
  }
  void update_u64(std::uint64_t v) { update(&v, sizeof v); }
  void update_i32(std::int32_t v) { update(&v, sizeof v); }
  void update_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    update_u64(bits);
  }
  std::uint64_t value() const { return hash_; }
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = hash_;
    for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
    return out;
  }

private:
  std::uint64_t hash_ = 1469598103934665603ull;
};

} // namespace detail

/// Content hash over the canonical in-memory dataset: sizes, class names,
/// labels, feature bit patterns and the undirected edge list. Independent of
/// source file formatting.
inline std::string dataset_fingerprint(const Dataset& ds) {
  detail::Fnv1a64 h;
  h.update_i32(ds.num_nodes());
  h.update_i32(ds.num_features());
  h.update_i32(ds.num_classes());
  h.update_i32(ds.features_l1_normalized ? 1 : 0);
  for (const auto& name : ds.class_names) h.update_string(name);
  for (int l : ds.labels) h.update_i32(l);
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      h.update_f64(ds.features(i, j));
  for (const WeightedEdge& e : ds.graph.edge_list()) {
    h.update_i32(e.u);
    h.update_i32(e.v);
    h.update_f64(e.weight);
  }
  return h.hex();
}

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[24];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json config_json(const PipelineConfig& cfg) {
  return {
      {"robust_fraction", cfg.robust_fraction},
      {"knn_k", cfg.knn_k},
      {"spade_k", cfg.spade_k},
      {"subgraph_space", to_string(cfg.subgraph_space)},
      {"centroid_space", to_string(cfg.centroid_space)},
      {"g_input_source", to_string(cfg.g_input_source)},
      {"metric", to_string(cfg.metric)},
      {"seed", cfg.seed},
      {"gcn",
       {{"hidden", cfg.gcn.hidden},
        {"learning_rate", cfg.gcn.learning_rate},
        {"weight_decay", cfg.gcn.weight_decay},
        {"dropout", cfg.gcn.dropout},
        {"epochs", cfg.gcn.epochs}}},
  };
}

struct RunManifest {
  std::string command;
  std::string dataset_spec;
  std::string dataset_fingerprint;
  int nodes = 0, features = 0, classes = 0;
  PipelineConfig config;
  int per_class_train = 0;
  std::string timestamp; // informational; stripped by determinism checks

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["dataset"] = {{"spec", dataset_spec},
                    {"fingerprint", dataset_fingerprint},
                    {"nodes", nodes},
                    {"features", features},
                    {"classes", classes}};
    j["config"] = config_json(config);
    j["config"]["per_class_train"] = per_class_train;
    j["seed"] = config.seed;
    j["timestamp"] = timestamp;
    return j;
  }
};

inline RunManifest make_manifest(const std::string& command,
                                 const std::string& dataset_spec,
                                 const Dataset& ds, const PipelineConfig& cfg,
                                 int per_class_train) {
  RunManifest m;
  m.command = command;
  m.dataset_spec = dataset_spec;
  m.dataset_fingerprint = dataset_fingerprint(ds);
  m.nodes = ds.num_nodes();
  m.features = ds.num_features();
  m.classes = ds.num_classes();
  m.config = cfg;
  m.per_class_train = per_class_train;
  m.timestamp = utc_timestamp();
  return m;
}

} // namespace spade
