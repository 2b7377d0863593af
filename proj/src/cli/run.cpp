#include <ostream>

#include <CLI11.hpp>

#include "ffsense/cli/cli.hpp"

namespace ffsense::cli {

int run(int argc, const char* const* argv, Streams io) {
  CLI::App app{"Filter-robust face recognition and filter impact analysis"};
  app.require_subcommand(1);

  std::string manifest, config, split, out, checkpoints, dump, analysis, ids, subset = "test", format;
  std::uint64_t seed = 0;
  double fraction = 0.8, threshold = 0.75;
  bool global = false;

  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  validate->add_option("--manifest", manifest)->required();

  auto* split_cmd = app.add_subcommand("split", "Write an 80:20 train/test split");
  split_cmd->add_option("--manifest", manifest)->required();
  split_cmd->add_option("--out", out, "split JSON path")->required();
  split_cmd->add_option("--seed", seed);
  split_cmd->add_option("--fraction", fraction, "train fraction")->check(CLI::Range(0.0, 1.0));
  split_cmd->add_flag("--global", global, "split the image list without per-subject stratification");

  auto* train = app.add_subcommand("train", "Train the identity network and attribute heads");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--split", split)->required();
  train->add_option("--config", config)->required();
  train->add_option("--out", out, "checkpoint directory")->required();
  auto* train_seed = train->add_option("--seed", seed, "override the config seed");

  auto* predict = app.add_subcommand("predict", "Write a prediction dump");
  predict->add_option("--checkpoints", checkpoints)->required();
  predict->add_option("--manifest", manifest)->required();
  predict->add_option("--split", split);
  predict->add_option("--subset", subset, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  predict->add_option("--ids", ids, "file with one image id per line");
  predict->add_option("--out", out, "JSONL path")->required();

  auto* analyze = app.add_subcommand("analyze", "Compute metric reports from a prediction dump");
  analyze->add_option("--dump", dump)->required();
  analyze->add_option("--manifest", manifest)->required();
  analyze->add_option("--out", out, "analysis directory")->required();
  analyze->add_option("--threshold", threshold);
  analyze->add_option("--split", split, "restrict classification metrics to the test ids");

  auto* report = app.add_subcommand("report", "Render analysis results");
  report->add_option("--analysis", analysis)->required();
  report->add_option("--out", out, "report directory")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"markdown", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitDomain;
  }

  if (validate->parsed()) return cmd_validate(manifest, io);
  if (split_cmd->parsed()) return cmd_split({manifest, out, seed, fraction, !global}, io);
  if (train->parsed()) {
    TrainOptions opts{manifest, split, config, out, std::nullopt};
    if (train_seed->count()) opts.seed = seed;
    return cmd_train(opts, io);
  }
  if (predict->parsed()) {
    PredictOptions opts;
    opts.checkpoints = checkpoints;
    opts.manifest = manifest;
    if (!split.empty()) opts.split = split;
    opts.subset = subset == "train" ? Subset::train : subset == "all" ? Subset::all : Subset::test;
    if (!ids.empty()) opts.ids = ids;
    opts.out = out;
    return cmd_predict(opts, io);
  }
  if (analyze->parsed()) {
    AnalyzeOptions opts{dump, manifest, out, threshold, std::nullopt};
    if (!split.empty()) opts.split = split;
    return cmd_analyze(opts, io);
  }
  ReportOptions opts{analysis, out, std::nullopt};
  if (!format.empty()) opts.format = format;
  return cmd_report(opts, io);
}

}  // namespace ffsense::cli
