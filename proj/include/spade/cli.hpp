#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spade/dataset.hpp"
#include "spade/errors.hpp"
#include "spade/format.hpp"
#include "spade/manifest.hpp"
#include "spade/pipeline.hpp"

// Command implementations behind the `spade` binary: score, run, sweep. Kept
// header-side so tests drive them directly; the binary is a thin argument
// parser plus the exception -> exit-code mapping (1 usage, 2 data,
// 3 numeric).

namespace spade {

struct CliOptions {
  std::string dataset;       // generic JSON path, "cora" or "cora:<dir>"
  std::string out_dir = "."; // reports and CSVs land here
  PipelineConfig config;
  int per_class_train = 20;
  std::vector<double> fractions; // pipeline fractions, ascending output order
  bool include_baseline = true;  // "orig" row
  bool normalize_features = true;
};

namespace detail {

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

} // namespace detail

/// "cora" → $SPADE_CORA_DIR or ./data/cora; "cora:<dir>" → that directory;
/// anything else → generic JSON dataset file.
inline Dataset load_dataset(const std::string& spec,
                            bool normalize_features = true) {
  LoadOptions opts;
  opts.normalize_features = normalize_features;
  if (spec == "cora" || spec.rfind("cora:", 0) == 0) {
    std::string dir = spec == "cora"
                          ? detail::env_or("SPADE_CORA_DIR", "data/cora")
                          : spec.substr(5);
    return load_cora(dir + "/cora.content", dir + "/cora.cites", opts);
  }
  return load_generic(spec, opts);
}

/// "orig,0.2,0.4" or a range "0.2..1.0:0.2". Returns fractions in the order
/// given; sets *include_baseline when an "orig" entry is present.
inline std::vector<double> parse_fractions(const std::string& text,
                                           bool* include_baseline) {
  *include_baseline = false;
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  auto parse_one = [](const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad fraction '" + s + "'");
    }
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "orig" || item == "Orig") {
      *include_baseline = true;
      continue;
    }
    auto dots = item.find("..");
    if (dots != std::string::npos) {
      auto colon = item.find(':', dots + 2);
      if (colon == std::string::npos)
        throw UsageError("range fraction needs a step: lo..hi:step");
      double lo = parse_one(item.substr(0, dots));
      double hi = parse_one(item.substr(dots + 2, colon - dots - 2));
      double step = parse_one(item.substr(colon + 1));
      if (!(step > 0.0) || hi < lo)
        throw UsageError("bad fraction range '" + item + "'");
      for (int i = 0;; ++i) {
        // re-round each point so accumulated float drift cannot skip hi
        double v = std::round((lo + i * step) * 1e9) / 1e9;
        if (v > hi + 1e-12) break;
        out.push_back(v);
      }
      continue;
    }
    out.push_back(parse_one(item));
  }
  for (double f : out)
    if (!(f > 0.0) || f > 1.0)
      throw UsageError("fraction " + format_double(f) + " outside (0, 1]");
  return out;
}

/// "0.4" → "40%", "0.125" → "12.5%" (4-decimal rounding, zeros trimmed).
inline std::string fraction_label(double f) {
  std::string s = format_fixed(f * 100.0, 4);
  auto dot = s.find('.');
  auto last = s.find_last_not_of('0');
  s.erase(s[last] == '.' ? last : last + 1);
  (void)dot;
  return s + "%";
}

// ---------------------------------------------------------------------------
// stage-one cache

/// Cache directory resolution: SPADE_CACHE_DIR wins; set-but-empty disables
/// caching; default is ~/.cache/spade.
inline std::optional<std::filesystem::path> cache_dir() {
  if (const char* v = std::getenv("SPADE_CACHE_DIR")) {
    if (*v == '\0') return std::nullopt;
    return std::filesystem::path(v);
  }
  const char* home = std::getenv("HOME");
  if (!home || *home == '\0') return std::filesystem::path(".spade_cache");
  return std::filesystem::path(home) / ".cache" / "spade";
}

namespace detail {

/// Everything that influences stage one goes into the key; fractions and
/// centroid/subgraph spaces do not (they are stage two).
inline std::string stage_one_cache_key(const std::string& fingerprint,
                                       const PipelineConfig& cfg,
                                       const Split& split,
                                       bool normalized_features) {
  Fnv1a64 h;
  h.update_string("stage-one-v1");
  h.update_string(fingerprint);
  h.update_u64(cfg.seed);
  h.update_i32(cfg.knn_k);
  h.update_i32(cfg.spade_k);
  h.update_i32(static_cast<int>(cfg.g_input_source));
  h.update_i32(static_cast<int>(cfg.metric));
  h.update_i32(cfg.gcn.hidden);
  h.update_f64(cfg.gcn.learning_rate);
  h.update_f64(cfg.gcn.weight_decay);
  h.update_f64(cfg.gcn.dropout);
  h.update_i32(cfg.gcn.epochs);
  h.update_u64(split.seed);
  h.update_i32(split.per_class_train);
  h.update_i32(normalized_features ? 1 : 0);
  return h.hex();
}

inline nlohmann::json stage_one_to_json(const StageOne& s) {
  nlohmann::json j;
  j["cache_version"] = 1;
  j["baseline_accuracy"] = s.baseline_accuracy;
  j["baseline_predictions"] = s.baseline_predictions;
  j["eigenvalues"] =
      std::vector<double>(s.subspace.eigenvalues.data(),
                          s.subspace.eigenvalues.data() + s.subspace.k);
  j["scores"] = std::vector<double>(s.scores.scores.data(),
                                    s.scores.scores.data() + s.scores.size());
  j["is_isolated"] = s.scores.is_isolated;
  std::vector<double> emb;
  emb.reserve(s.embeddings.size());
  for (Eigen::Index i = 0; i < s.embeddings.rows(); ++i)
    for (Eigen::Index c = 0; c < s.embeddings.cols(); ++c)
      emb.push_back(s.embeddings(i, c));
  j["embeddings"] = {{"rows", s.embeddings.rows()},
                     {"cols", s.embeddings.cols()},
                     {"data", emb}};
  return j;
}

/// Rebuild the stage-two-relevant slice of StageOne. The graphs, model and
/// eigenvectors are not cached; nothing downstream of stage one reads them.
inline StageOne stage_one_from_json(const nlohmann::json& j) {
  if (j.at("cache_version").get<int>() != 1)
    throw DataError("stage-one cache: unsupported version");
  StageOne s;
  s.baseline_accuracy = j.at("baseline_accuracy").get<double>();
  s.baseline_predictions =
      j.at("baseline_predictions").get<std::vector<int>>();
  auto ev = j.at("eigenvalues").get<std::vector<double>>();
  s.subspace.k = static_cast<int>(ev.size());
  s.subspace.eigenvalues =
      Eigen::Map<Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  auto sc = j.at("scores").get<std::vector<double>>();
  s.scores.scores =
      Eigen::Map<Eigen::VectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  s.scores.is_isolated = j.at("is_isolated").get<std::vector<std::uint8_t>>();
  s.scores.ranking.resize(sc.size());
  std::iota(s.scores.ranking.begin(), s.scores.ranking.end(), 0);
  std::stable_sort(
      s.scores.ranking.begin(), s.scores.ranking.end(),
      [&](int a, int b) { return s.scores.scores[a] < s.scores.scores[b]; });
  const auto& e = j.at("embeddings");
  auto data = e.at("data").get<std::vector<double>>();
  const auto rows = e.at("rows").get<Eigen::Index>();
  const auto cols = e.at("cols").get<Eigen::Index>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw DataError("stage-one cache: embedding payload has wrong length");
  s.embeddings.resize(rows, cols);
  std::size_t t = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) s.embeddings(i, c) = data[t++];
  s.timing["stage_one_cache_read"] = 0.0;
  return s;
}

} // namespace detail

/// run_stage_one behind a transparent file cache; corrupt or unreadable
/// entries are recomputed and rewritten.
inline StageOne run_stage_one_cached(const Dataset& ds, const Split& split,
                                     const PipelineConfig& cfg,
                                     const std::string& fingerprint) {
  auto dir = cache_dir();
  std::filesystem::path file;
  if (dir) {
    std::string key = detail::stage_one_cache_key(fingerprint, cfg, split,
                                                  ds.features_l1_normalized);
    file = *dir / ("stage_one_" + key + ".json");
    std::ifstream in(file);
    if (in) {
      try {
        nlohmann::json j;
        in >> j;
        return detail::stage_one_from_json(j);
      } catch (const std::exception&) {
        // fall through and recompute
      }
    }
  }
  StageOne s = run_stage_one(ds, split, cfg);
  if (dir) {
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    std::ofstream out(tmp);
    if (out) {
      out << detail::stage_one_to_json(s).dump(1) << "\n";
      out.close();
      std::filesystem::rename(tmp, file, ec); // atomic publish, best effort
      if (ec) std::filesystem::remove(tmp, ec);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// commands

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("short write on " + path.string());
}

inline nlohmann::json split_json(const Split& split) {
  return {{"seed", split.seed},
          {"per_class_train", split.per_class_train},
          {"train_size", split.train_ids.size()},
          {"test_size", split.test_ids.size()}};
}

inline nlohmann::json run_entry_json(double fraction,
                                     const PipelineReport& rep) {
  return {{"fraction", fraction},
          {"label", fraction_label(fraction)},
          {"robust_count", rep.robust_count},
          {"robust_test_count", rep.robust_test_count},
          {"rest_test_count", rep.rest_test_count},
          {"robust_accuracy", rep.robust_accuracy},
          {"rest_accuracy", rep.rest_accuracy},
          {"combined_accuracy", rep.combined_accuracy}};
}

inline std::string predictions_filename(double fraction) {
  std::string label = fraction_label(fraction);
  label.pop_back(); // trailing %
  return "predictions_" + label + "pct.csv";
}

} // namespace detail

/// Scores every node and writes scores.csv plus score_manifest.json.
inline int cmd_score(const CliOptions& opt, std::ostream& out) {
  Dataset ds = load_dataset(opt.dataset, opt.normalize_features);
  Split split = make_split(ds, opt.per_class_train, opt.config.seed);
  std::string fingerprint = dataset_fingerprint(ds);
  StageOne s1 = run_stage_one_cached(ds, split, opt.config, fingerprint);

  std::filesystem::create_directories(opt.out_dir);
  std::filesystem::path dir(opt.out_dir);
  detail::write_text_file(dir / "scores.csv", scores_to_csv(s1.scores));

  RunManifest manifest =
      make_manifest("score", opt.dataset, ds, opt.config, opt.per_class_train);
  manifest.dataset_fingerprint = fingerprint;
  nlohmann::json j;
  j["manifest"] = manifest.to_json();
  j["split"] = detail::split_json(split);
  j["baseline_accuracy"] = s1.baseline_accuracy;
  j["eigenvalues"] =
      std::vector<double>(s1.subspace.eigenvalues.data(),
                          s1.subspace.eigenvalues.data() + s1.subspace.k);
  j["timing"] = s1.timing;
  detail::write_text_file(dir / "score_manifest.json", j.dump(1) + "\n");

  out << "scored " << ds.num_nodes() << " nodes -> "
      << (dir / "scores.csv").string() << "\n";
  return 0;
}

/// Shared by run and sweep: one stage-one pass, one stage-two pass per
/// fraction, a Table-style text summary and a full JSON report.
inline int run_fractions(const CliOptions& opt, const std::string& command,
                         std::ostream& out) {
  if (opt.fractions.empty() && !opt.include_baseline)
    throw UsageError("no fractions given (use --fraction, --fractions or orig)");
  for (double f : opt.fractions)
    if (!(f > 0.0) || f > 1.0)
      throw UsageError("fraction " + format_double(f) + " outside (0, 1]");
  Dataset ds = load_dataset(opt.dataset, opt.normalize_features);
  Split split = make_split(ds, opt.per_class_train, opt.config.seed);
  std::string fingerprint = dataset_fingerprint(ds);

  std::optional<StageOne> s1;
  if (!opt.fractions.empty())
    s1 = run_stage_one_cached(ds, split, opt.config, fingerprint);

  std::filesystem::create_directories(opt.out_dir);
  std::filesystem::path dir(opt.out_dir);

  RunManifest manifest =
      make_manifest(command, opt.dataset, ds, opt.config, opt.per_class_train);
  manifest.dataset_fingerprint = fingerprint;
  nlohmann::json report;
  report["manifest"] = manifest.to_json();
  report["split"] = detail::split_json(split);
  report["fractions"] = nlohmann::json::array();

  const std::string header = "Robust Node Selection Percentage | Accuracy";
  const std::size_t col = header.find('|') - 1;
  out << header << "\n";
  auto row = [&](const std::string& label, double acc) {
    out << label << std::string(col - label.size(), ' ') << "| "
        << format_fixed(acc, 4) << "\n";
  };

  double baseline_acc = 0.0;
  bool have_baseline = false;
  if (opt.include_baseline) {
    baseline_acc = s1 ? s1->baseline_accuracy
                      : run_baseline(ds, split, opt.config);
    have_baseline = true;
    row("Orig", baseline_acc);
  }
  std::map<std::string, double> timing;
  if (s1) {
    baseline_acc = s1->baseline_accuracy;
    have_baseline = true;
    timing = s1->timing;
  }
  for (double f : opt.fractions) {
    PipelineConfig cfg = opt.config;
    cfg.robust_fraction = f;
    PipelineReport rep = run_stage_two(ds, split, cfg, *s1);
    row(fraction_label(f), rep.combined_accuracy);
    report["fractions"].push_back(detail::run_entry_json(f, rep));
    detail::write_text_file(dir / detail::predictions_filename(f),
                            report_to_csv(rep));
    for (const auto& [k, v] : rep.timing)
      if (!s1->timing.count(k)) timing[k] += v;
  }
  if (have_baseline) report["baseline_accuracy"] = baseline_acc;
  if (s1)
    report["eigenvalues"] =
        std::vector<double>(s1->subspace.eigenvalues.data(),
                            s1->subspace.eigenvalues.data() + s1->subspace.k);
  report["timing"] = timing;
  detail::write_text_file(dir / (command + "_report.json"),
                          report.dump(1) + "\n");
  return 0;
}

inline int cmd_run(const CliOptions& opt, std::ostream& out) {
  return run_fractions(opt, "run", out);
}

inline int cmd_sweep(const CliOptions& opt, std::ostream& out) {
  if (opt.fractions.empty())
    throw UsageError("sweep: empty fraction list");
  return run_fractions(opt, "sweep", out);
}

} // namespace spade
