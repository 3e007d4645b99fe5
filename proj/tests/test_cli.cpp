#include <gtest/gtest.h>

#include "spade/cli.hpp"

#include "support.hpp"

#include <cstdlib>
#include <map>
#include <sstream>

using spade::CliOptions;
using spade::fraction_label;
using spade::parse_fractions;

namespace {

/// Scoped environment override, restored on destruction.
class EnvGuard {
public:
  EnvGuard(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) {
      had_ = true;
      old_ = old;
    }
    if (value)
      ::setenv(name, value, 1);
    else
      ::unsetenv(name);
  }
  ~EnvGuard() {
    if (had_)
      ::setenv(name_.c_str(), old_.c_str(), 1);
    else
      ::unsetenv(name_.c_str());
  }

private:
  std::string name_;
  std::string old_;
  bool had_ = false;
};

std::string make_unique_dir(const std::string& tag) {
  static int counter = 0;
  std::string dir = testing::TempDir() + "/cli_" + tag + "_" +
                    std::to_string(counter++);
  // the per-process counter repeats across test invocations; start clean
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string toy_dataset_file() {
  static std::string path = [] {
    spade::Dataset ds = support::cluster_dataset(2, 20, 4, 801, 0.3);
    std::string p = make_unique_dir("data") + "/toy.json";
    spade::write_generic(ds, p);
    return p;
  }();
  return path;
}

CliOptions toy_options(const std::string& out_dir) {
  CliOptions opt;
  opt.dataset = toy_dataset_file();
  opt.out_dir = out_dir;
  opt.per_class_train = 8;
  opt.config.knn_k = 5;
  opt.config.gcn.hidden = 8;
  opt.config.gcn.epochs = 60;
  opt.config.seed = 3;
  return opt;
}

/// Report JSON with the volatile fields (timing, manifest timestamp) removed.
nlohmann::json stripped_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  j.erase("timing");
  if (j.contains("manifest")) j["manifest"].erase("timestamp");
  return j;
}

/// label -> accuracy column from the two-column table.
std::map<std::string, std::string> parse_table(const std::string& text) {
  std::map<std::string, std::string> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    auto bar = line.find('|');
    if (bar == std::string::npos) continue;
    std::string label = line.substr(0, bar);
    label.erase(label.find_last_not_of(' ') + 1);
    rows[label] = line.substr(bar + 2);
  }
  return rows;
}

} // namespace

TEST(ParseFractions, SingleAndList) {
  bool orig = false;
  EXPECT_EQ(parse_fractions("0.5", &orig), (std::vector<double>{0.5}));
  EXPECT_FALSE(orig);
  EXPECT_EQ(parse_fractions("orig,0.4", &orig), (std::vector<double>{0.4}));
  EXPECT_TRUE(orig);
  EXPECT_EQ(parse_fractions("0.2,0.4,0.6", &orig),
            (std::vector<double>{0.2, 0.4, 0.6}));
  EXPECT_TRUE(parse_fractions("orig", &orig).empty());
  EXPECT_TRUE(orig);
  EXPECT_TRUE(parse_fractions("", &orig).empty());
  EXPECT_FALSE(orig);
}

TEST(ParseFractions, RangeExpansion) {
  bool orig = false;
  std::vector<double> got = parse_fractions("0.2..1.0:0.2", &orig);
  ASSERT_EQ(got.size(), 5u);
  double expect[] = {0.2, 0.4, 0.6, 0.8, 1.0};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(got[i], expect[i]);
  // mixed list and range
  got = parse_fractions("orig,0.1,0.25..0.75:0.25", &orig);
  EXPECT_TRUE(orig);
  ASSERT_EQ(got.size(), 4u);
  EXPECT_DOUBLE_EQ(got[0], 0.1);
  EXPECT_DOUBLE_EQ(got[1], 0.25);
  EXPECT_DOUBLE_EQ(got[3], 0.75);
}

TEST(ParseFractions, Rejections) {
  bool orig = false;
  EXPECT_THROW(parse_fractions("abc", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("0.0", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("1.2", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("-0.4", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("0.2..0.8", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("0.8..0.2:0.1", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("0.2..0.8:0", &orig), spade::UsageError);
  EXPECT_THROW(parse_fractions("0.4x", &orig), spade::UsageError);
}

TEST(FractionLabel, Formatting) {
  EXPECT_EQ(fraction_label(0.4), "40%");
  EXPECT_EQ(fraction_label(0.125), "12.5%");
  EXPECT_EQ(fraction_label(1.0), "100%");
  EXPECT_EQ(fraction_label(0.05), "5%");
  EXPECT_EQ(fraction_label(0.333333333), "33.3333%"); // 4-decimal cap
  EXPECT_EQ(spade::detail::predictions_filename(0.4), "predictions_40pct.csv");
  EXPECT_EQ(spade::detail::predictions_filename(0.125),
            "predictions_12.5pct.csv");
}

TEST(CmdScore, WritesScoresAndManifest) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  std::string dir = make_unique_dir("score");
  std::ostringstream out;
  int rc = spade::cmd_score(toy_options(dir), out);
  EXPECT_EQ(rc, 0);
  EXPECT_NE(out.str().find("scored 40 nodes"), std::string::npos);

  std::string csv = support::read_file(dir + "/scores.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "node_id,score,rank,is_isolated");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 40);

  nlohmann::json j = stripped_json(dir + "/score_manifest.json");
  EXPECT_EQ(j["manifest"]["command"], "score");
  EXPECT_EQ(j["manifest"]["dataset"]["nodes"], 40);
  EXPECT_EQ(j["eigenvalues"].size(), 2u); // spade_k defaulted to C = 2
  EXPECT_EQ(j["split"]["train_size"], 16);
  EXPECT_TRUE(j.contains("baseline_accuracy"));
}

TEST(CmdScore, RepeatRunsAreByteIdentical) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  std::string d1 = make_unique_dir("score_a");
  std::string d2 = make_unique_dir("score_b");
  std::ostringstream sink;
  spade::cmd_score(toy_options(d1), sink);
  spade::cmd_score(toy_options(d2), sink);
  EXPECT_EQ(support::read_file(d1 + "/scores.csv"),
            support::read_file(d2 + "/scores.csv"));
  EXPECT_EQ(stripped_json(d1 + "/score_manifest.json"),
            stripped_json(d2 + "/score_manifest.json"));
}

TEST(CmdScore, MissingDatasetFileIsDataError) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  CliOptions opt = toy_options(make_unique_dir("score_missing"));
  opt.dataset = "/nonexistent/and/absent.json";
  std::ostringstream sink;
  try {
    spade::cmd_score(opt, sink);
    FAIL() << "expected DataError";
  } catch (const spade::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/and/absent.json"),
              std::string::npos);
  }
}

TEST(CmdRun, TableMatchesJsonReportToFourDecimals) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  std::string dir = make_unique_dir("run");
  CliOptions opt = toy_options(dir);
  opt.fractions = {0.4, 0.6};
  opt.include_baseline = true;
  std::ostringstream out;
  EXPECT_EQ(spade::cmd_run(opt, out), 0);

  auto rows = parse_table(out.str());
  ASSERT_EQ(rows.size(), 3u);
  ASSERT_TRUE(rows.count("Orig"));
  ASSERT_TRUE(rows.count("40%"));
  ASSERT_TRUE(rows.count("60%"));
  EXPECT_NE(out.str().find("Robust Node Selection Percentage | Accuracy"),
            std::string::npos);

  std::ifstream in(dir + "/run_report.json");
  nlohmann::json j;
  in >> j;
  EXPECT_EQ(rows["Orig"],
            spade::format_fixed(j["baseline_accuracy"].get<double>(), 4));
  ASSERT_EQ(j["fractions"].size(), 2u);
  EXPECT_EQ(rows["40%"], spade::format_fixed(
                             j["fractions"][0]["combined_accuracy"].get<double>(), 4));
  EXPECT_EQ(rows["60%"], spade::format_fixed(
                             j["fractions"][1]["combined_accuracy"].get<double>(), 4));
  // per-fraction prediction dumps exist
  EXPECT_TRUE(std::filesystem::exists(dir + "/predictions_40pct.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/predictions_60pct.csv"));
}

TEST(CmdRun, BaselineOnlyRunNeedsNoStageOne) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  std::string dir = make_unique_dir("run_orig");
  CliOptions opt = toy_options(dir);
  opt.fractions.clear();
  opt.include_baseline = true;
  std::ostringstream out;
  EXPECT_EQ(spade::cmd_run(opt, out), 0);
  auto rows = parse_table(out.str());
  EXPECT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows.count("Orig"));
  nlohmann::json j = stripped_json(dir + "/run_report.json");
  EXPECT_TRUE(j["fractions"].empty());
  EXPECT_FALSE(j.contains("eigenvalues")); // no pencil was solved
}

TEST(CmdRun, NoFractionsAndNoBaselineRejected) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  CliOptions opt = toy_options(make_unique_dir("run_none"));
  opt.fractions.clear();
  opt.include_baseline = false;
  std::ostringstream sink;
  EXPECT_THROW(spade::cmd_run(opt, sink), spade::UsageError);
}

TEST(CmdRun, OutOfRangeFractionRejectedBeforeAnyOutput) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  CliOptions opt = toy_options(make_unique_dir("run_bad"));
  opt.fractions = {2.0};
  std::ostringstream out;
  EXPECT_THROW(spade::cmd_run(opt, out), spade::UsageError);
  EXPECT_TRUE(out.str().empty()); // the table header must not have printed
}

TEST(CmdRun, DeterministicAcrossRuns) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  std::string d1 = make_unique_dir("run_det_a");
  std::string d2 = make_unique_dir("run_det_b");
  CliOptions o1 = toy_options(d1), o2 = toy_options(d2);
  o1.fractions = o2.fractions = {0.4};
  std::ostringstream t1, t2;
  spade::cmd_run(o1, t1);
  spade::cmd_run(o2, t2);
  EXPECT_EQ(t1.str(), t2.str());
  EXPECT_EQ(support::read_file(d1 + "/predictions_40pct.csv"),
            support::read_file(d2 + "/predictions_40pct.csv"));
  EXPECT_EQ(stripped_json(d1 + "/run_report.json"),
            stripped_json(d2 + "/run_report.json"));
}

TEST(CmdSweep, SharesStageOneWithRunResults) {
  // warm cache in a private dir; sweep must reproduce run's numbers exactly
  std::string cache = make_unique_dir("cache_shared");
  EnvGuard use_cache("SPADE_CACHE_DIR", cache.c_str());
  std::string d_run = make_unique_dir("sweep_ref");
  std::string d_sweep = make_unique_dir("sweep_out");
  CliOptions run_opt = toy_options(d_run);
  run_opt.fractions = {0.4};
  std::ostringstream sink;
  spade::cmd_run(run_opt, sink);

  CliOptions sweep_opt = toy_options(d_sweep);
  sweep_opt.fractions = {0.4, 0.8};
  sweep_opt.include_baseline = true;
  std::ostringstream table;
  EXPECT_EQ(spade::cmd_sweep(sweep_opt, table), 0);
  EXPECT_EQ(support::read_file(d_run + "/predictions_40pct.csv"),
            support::read_file(d_sweep + "/predictions_40pct.csv"));
  EXPECT_TRUE(std::filesystem::exists(d_sweep + "/sweep_report.json"));
  // the sweep's cached stage one reproduced the same accuracy table rows
  auto run_rows = parse_table(sink.str());
  auto sweep_rows = parse_table(table.str());
  EXPECT_EQ(run_rows["40%"], sweep_rows["40%"]);
}

TEST(CmdSweep, EmptyFractionListRejected) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  CliOptions opt = toy_options(make_unique_dir("sweep_none"));
  opt.fractions.clear();
  std::ostringstream sink;
  EXPECT_THROW(spade::cmd_sweep(opt, sink), spade::UsageError);
}

TEST(StageOneCache, WarmRunsAreByteIdenticalAndFaster) {
  std::string cache = make_unique_dir("cache_roundtrip");
  EnvGuard use_cache("SPADE_CACHE_DIR", cache.c_str());
  std::string d1 = make_unique_dir("cache_a");
  std::string d2 = make_unique_dir("cache_b");
  CliOptions o1 = toy_options(d1), o2 = toy_options(d2);
  o1.fractions = o2.fractions = {0.4};
  std::ostringstream t1, t2;
  spade::cmd_run(o1, t1); // cold: populates the cache
  ASSERT_FALSE(std::filesystem::is_empty(cache));
  spade::cmd_run(o2, t2); // warm: must replay bit-for-bit
  EXPECT_EQ(t1.str(), t2.str());
  EXPECT_EQ(support::read_file(d1 + "/predictions_40pct.csv"),
            support::read_file(d2 + "/predictions_40pct.csv"));
  EXPECT_EQ(stripped_json(d1 + "/run_report.json"),
            stripped_json(d2 + "/run_report.json"));
  // warm run marks the replay in its timing block
  std::ifstream in(d2 + "/run_report.json");
  nlohmann::json j;
  in >> j;
  EXPECT_TRUE(j["timing"].contains("stage_one_cache_read"));
}

TEST(StageOneCache, DifferentSeedMissesTheCache) {
  std::string cache = make_unique_dir("cache_seeded");
  EnvGuard use_cache("SPADE_CACHE_DIR", cache.c_str());
  std::ostringstream sink;
  CliOptions a = toy_options(make_unique_dir("cache_s1"));
  a.fractions = {0.4};
  spade::cmd_run(a, sink);
  std::size_t after_first =
      std::distance(std::filesystem::directory_iterator(cache),
                    std::filesystem::directory_iterator{});
  CliOptions b = toy_options(make_unique_dir("cache_s2"));
  b.fractions = {0.4};
  b.config.seed = 99;
  spade::cmd_run(b, sink);
  std::size_t after_second =
      std::distance(std::filesystem::directory_iterator(cache),
                    std::filesystem::directory_iterator{});
  EXPECT_GT(after_second, after_first);
}

TEST(StageOneCache, EmptyEnvDisablesCaching) {
  EnvGuard no_cache("SPADE_CACHE_DIR", "");
  EXPECT_FALSE(spade::cache_dir().has_value());
}

TEST(LoadDatasetSpec, CoraDirAndGenericPath) {
  EXPECT_THROW(spade::load_dataset("cora:/no/such/dir", true),
               spade::DataError);
  spade::Dataset ds = spade::load_dataset(toy_dataset_file(), true);
  EXPECT_EQ(ds.num_nodes(), 40);
  EXPECT_TRUE(ds.features_l1_normalized);
  spade::Dataset raw = spade::load_dataset(toy_dataset_file(), false);
  EXPECT_FALSE(raw.features_l1_normalized);
}
