// spade — score node robustness, run the multi-level pipeline, sweep
// fractions. Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spade/cli.hpp"

namespace {

struct RawArgs {
  std::string metric = "euclidean";
  std::string subgraph_space = "raw_features";
  std::string centroid_space = "raw_features";
  std::string g_input = "given_graph";
  std::string fractions;
  double fraction = -1.0;
  bool no_normalize = false;
};

void add_common(CLI::App* cmd, spade::CliOptions& opt, RawArgs& raw) {
  cmd->add_option("--dataset", opt.dataset,
                  "generic JSON path, 'cora' or 'cora:<dir>'")
      ->required();
  cmd->add_option("--seed", opt.config.seed, "seed for split, init, dropout");
  cmd->add_option("--knn-k", opt.config.knn_k, "neighbors for KNN graphs");
  cmd->add_option("--spade-k", opt.config.spade_k,
                  "pencil eigenpairs (0 = one per class)");
  cmd->add_option("--metric", raw.metric, "euclidean|cosine");
  cmd->add_option("--g-input", raw.g_input,
                  "input graph source: given_graph|knn_features");
  cmd->add_option("--hidden", opt.config.gcn.hidden, "GCN hidden width");
  cmd->add_option("--epochs", opt.config.gcn.epochs, "GCN training epochs");
  cmd->add_option("--lr", opt.config.gcn.learning_rate, "Adam learning rate");
  cmd->add_option("--dropout", opt.config.gcn.dropout, "dropout rate");
  cmd->add_option("--weight-decay", opt.config.gcn.weight_decay,
                  "L2 coefficient");
  cmd->add_option("--train-per-class", opt.per_class_train,
                  "labeled nodes sampled per class");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_flag("--no-normalize", raw.no_normalize,
                "skip row-L1 feature normalization");
}

void finish_options(spade::CliOptions& opt, const RawArgs& raw) {
  opt.config.metric = spade::metric_from_string(raw.metric);
  opt.config.subgraph_space = spade::space_from_string(raw.subgraph_space);
  opt.config.centroid_space = spade::space_from_string(raw.centroid_space);
  opt.config.g_input_source =
      spade::g_input_source_from_string(raw.g_input);
  opt.normalize_features = !raw.no_normalize;
  if (raw.fraction >= 0.0 && !raw.fractions.empty())
    throw spade::UsageError("use either --fraction or --fractions, not both");
  if (raw.fraction >= 0.0) {
    opt.fractions = {raw.fraction};
    opt.include_baseline = false;
  } else if (!raw.fractions.empty()) {
    opt.fractions = spade::parse_fractions(raw.fractions,
                                           &opt.include_baseline);
  }
  opt.config.validate();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral node-robustness scoring and multi-level "
               "classification"};
  app.require_subcommand(1);
  spade::CliOptions opt;
  RawArgs raw;

  CLI::App* score = app.add_subcommand(
      "score", "write per-node robustness scores as CSV");
  add_common(score, opt, raw);

  CLI::App* run = app.add_subcommand(
      "run", "baseline plus pipeline accuracies for chosen fractions");
  add_common(run, opt, raw);
  run->add_option("--fraction", raw.fraction, "single robust fraction");
  run->add_option("--fractions", raw.fractions,
                  "comma list, may include 'orig' (default orig,0.4)");
  run->add_option("--robust-subgraph-space", raw.subgraph_space,
                  "raw_features|embeddings");
  run->add_option("--centroid-space", raw.centroid_space,
                  "raw_features|embeddings");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "pipeline accuracy across a fraction list or range");
  add_common(sweep, opt, raw);
  sweep->add_option("--fractions", raw.fractions,
                    "comma list or lo..hi:step, may include 'orig'")
      ->required();
  sweep->add_option("--robust-subgraph-space", raw.subgraph_space,
                    "raw_features|embeddings");
  sweep->add_option("--centroid-space", raw.centroid_space,
                    "raw_features|embeddings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    finish_options(opt, raw);
    if (score->parsed()) return spade::cmd_score(opt, std::cout);
    if (run->parsed()) {
      if (opt.fractions.empty() && raw.fraction < 0.0 && raw.fractions.empty())
        opt.fractions = spade::parse_fractions("orig,0.4",
                                               &opt.include_baseline);
      return spade::cmd_run(opt, std::cout);
    }
    return spade::cmd_sweep(opt, std::cout);
  } catch (const spade::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const spade::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spade::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
