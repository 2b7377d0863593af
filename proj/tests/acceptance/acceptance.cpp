// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any mandatory criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ffsense/cli/cli.hpp"
#include "ffsense/dataset/manifest.hpp"
#include "ffsense/dataset/split.hpp"
#include "ffsense/io.hpp"
#include "ffsense/metrics/metrics.hpp"
#include "ffsense/nn/loss.hpp"
#include "ffsense/nn/model.hpp"
#include "ffsense/nn/network_spec.hpp"
#include "ffsense/random.hpp"
#include "ffsense/report/report.hpp"
#include "ffsense/report/serialize.hpp"
#include "ffsense/train/config.hpp"
#include "ffsense/train/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tiny.hpp"

using namespace ffsense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::set<int> selected;  // empty runs everything

void criterion(int number, const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  if (!selected.empty() && !selected.count(number)) return;
  const auto start = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.pass && secs > budget_seconds) {
    r.pass = false;
    r.detail += fmt::format(" (over the {:.0f} s budget)", budget_seconds);
  }
  if (!r.pass) ++failures;
  std::cout << fmt::format("{} {:>2} {} [{:.2f} s] {}", r.pass ? "PASS" : "FAIL", number, name, secs, r.detail)
            << std::endl;
}

bool close_rel(double a, double b, double tol = 1e-9) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

int run_cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "ffsense");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, errs;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), {out, errs});
  if (err) *err = errs.str();
  return status;
}

// ---------------------------------------------------------------------------
// Published per-filter results, keyed by the label used in the tables.

struct PublishedRow {
  double distance;
  double reduction, increment, net;
  int male_as_female, female_as_male;
  std::map<std::string, int> wrongly_as;
};

const std::map<std::string, PublishedRow>& published() {
  static const std::map<std::string, PublishedRow> rows{
      {"Haircut Filter FaceApp",
       {0.458548, -2.062500, 1.478261, -0.292120, 1, 0, {{"black", 0}, {"east_asian", 3}, {"west_asian", 6}, {"white", 6}}}},
      {"Child Filter FaceApp",
       {0.507977, -3.371795, 1.888889, -0.741453, 4, 0, {{"black", 0}, {"east_asian", 10}, {"west_asian", 8}, {"white", 3}}}},
      {"Gender Reverse Filter FaceApp",
       {0.580298, -3.492754, 2.000000, -0.746377, 1, 3, {{"black", 0}, {"east_asian", 0}, {"west_asian", 2}, {"white", 5}}}},
      {"Hipster Beard Style Filter FaceApp",
       {0.332914, -2.530303, 1.812500, -0.358902, 0, 0, {{"black", 0}, {"east_asian", 8}, {"west_asian", 6}, {"white", 5}}}},
      {"Hair Color Blonde Filter FaceApp",
       {0.222967, -2.369863, 1.636364, -0.366750, 1, 0, {{"black", 0}, {"east_asian", 3}, {"west_asian", 3}, {"white", 6}}}},
      {"Puppy Filter B612",
       {0.494714, -3.200000, 1.800000, -0.700000, 1, 1, {{"black", 0}, {"east_asian", 15}, {"west_asian", 7}, {"white", 2}}}},
      {"So Sad Filter B612",
       {0.191711, -2.142857, 1.733333, -0.204762, 0, 0, {{"black", 0}, {"east_asian", 6}, {"west_asian", 7}, {"white", 1}}}},
      {"Hipster Look Filter Snapchat",
       {1.179643, -5.774194, 2.166667, -1.803763, 5, 2, {{"black", 0}, {"east_asian", 3}, {"west_asian", 0}, {"white", 29}}}},
      {"Sparkling Cartoon Filter Snapchat",
       {0.615396, -3.208333, 3.153846, -0.027244, 1, 0, {{"black", 0}, {"east_asian", 5}, {"west_asian", 2}, {"white", 7}}}},
      {"Body Mellow Glow Filter Snapchat",
       {0.427381, -2.716049, 1.200000, -0.758025, 1, 0, {{"black", 0}, {"east_asian", 3}, {"west_asian", 4}, {"white", 6}}}},
  };
  return rows;
}

// Analysis of the shipped filter-study fixture, computed once.
struct StudyAnalysis {
  report::FilterLabels labels;
  fs::path dir;
  TempDir tmp;
  double seconds = 0;
};

StudyAnalysis& study() {
  static StudyAnalysis a;
  static bool done = false;
  if (!done) {
    const fs::path fixture = FFSENSE_FIXTURE_DIR "/filter_study";
    a.labels = report::filter_labels(dataset::load_manifest(fixture / "manifest.jsonl"));
    a.dir = a.tmp / "analysis";
    const auto start = std::chrono::steady_clock::now();
    std::string err;
    const int status = run_cli({"analyze", "--dump", (fixture / "predictions.jsonl").string(), "--manifest",
                                (fixture / "manifest.jsonl").string(), "--out", a.dir.string()},
                               &err);
    a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (status != 0) throw std::runtime_error("analyze failed: " + err);
    done = true;
  }
  return a;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_text(p)); }

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  Rng rng(20240501);
  const std::vector<std::string> pool{"a", "b", "c", "d", "e"};
  auto labels = [&](std::size_t n, std::size_t k) {
    std::vector<std::string> v(n);
    for (auto& s : v) s = pool[rng.below(k)];
    return v;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(40), k = 2 + rng.below(4);
    auto actual = labels(n, k), predicted = labels(n, k);

    for (auto avg : {metrics::Averaging::macro, metrics::Averaging::weighted}) {
      auto got = metrics::classification_report(actual, predicted, avg);
      auto want = oracle::classification(actual, predicted, avg == metrics::Averaging::weighted);
      if (!close_rel(got.accuracy, want.accuracy) || !close_rel(got.precision, want.precision) ||
          !close_rel(got.recall, want.recall) || !close_rel(got.f1, want.f1))
        return {false, fmt::format("classification_report differs in trial {}", trial)};
      for (const auto& c : got.per_class) {
        const auto& o = want.per_class.at(c.label);
        if (!close_rel(c.precision, o.precision) || !close_rel(c.recall, o.recall) || !close_rel(c.f1, o.f1) ||
            c.support != o.support)
          return {false, fmt::format("per-class '{}' differs in trial {}", c.label, trial)};
      }
    }

    std::vector<double> ya(n), yp(n);
    for (std::size_t i = 0; i < n; ++i) {
      ya[i] = rng.uniform(0, 90);
      yp[i] = rng.uniform(0, 90);
    }
    if (n >= 2) {
      auto got = metrics::regression_report(ya, yp);
      auto want = oracle::regression(ya, yp);
      if (!close_rel(got.mae, want.mae) || !close_rel(got.mse, want.mse) || !close_rel(got.r2, want.r2))
        return {false, fmt::format("regression_report differs in trial {}", trial)};
    }

    std::vector<std::string> classes(pool.begin(), pool.begin() + static_cast<long>(k));
    auto cm = metrics::confusion(actual, predicted, classes);
    if (cm.counts != oracle::confusion(actual, predicted, classes))
      return {false, fmt::format("confusion differs in trial {}", trial)};

    const auto& eth = dataset::ethnicity_classes();
    std::vector<metrics::FilterLabels> per;
    for (int f = 0; f < 3; ++f) {
      metrics::FilterLabels fl{"f" + std::to_string(f), {}, {}};
      for (std::size_t i = 0; i < n; ++i) {
        fl.actual.push_back(eth[rng.below(eth.size())]);
        fl.predicted.push_back(eth[rng.below(eth.size())]);
      }
      per.push_back(fl);
    }
    auto table = metrics::misprediction_tables(per, metrics::Task::ethnicity);
    for (std::size_t f = 0; f < per.size(); ++f) {
      auto want = oracle::wrongly_predicted_as(per[f].actual, per[f].predicted);
      for (const auto& c : eth) {
        const auto it = want.find(c);
        if (table.rows[f].count(c) != (it == want.end() ? 0 : it->second))
          return {false, fmt::format("misprediction count for '{}' differs in trial {}", c, trial)};
      }
    }
  }
  return {true, "500 trials"};
}

Outcome distance_suite() {
  std::vector<double> v{3, 4};
  auto n = metrics::l2_normalize(v);
  if (n.size() != 2 || std::fabs(n[0] - 0.6) > 1e-15 || std::fabs(n[1] - 0.8) > 1e-15)
    return {false, "l2_normalize([3,4])"};
  std::vector<double> p{0.2, 0.3, 0.5};
  if (metrics::pair_distance(p, p).d != 0.0) return {false, "identical distributions"};
  std::vector<double> e1{1, 0, 0}, e2{0, 1, 0};
  if (std::fabs(metrics::pair_distance(e1, e2).d - std::sqrt(2.0)) > 1e-12) return {false, "disjoint one-hots"};
  std::vector<double> a{0.5, 0.5}, b{0.8, 0.2};
  const double by_hand = oracle::distance(a, b);
  if (std::fabs(metrics::pair_distance(a, b).d - by_hand) > 1e-12) return {false, "[0.5,0.5] vs [0.8,0.2]"};

  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t len = 2 + rng.below(120);
    std::vector<double> x(len), y(len), xs(len), ys(len);
    const double s1 = rng.uniform(0.01, 100), s2 = rng.uniform(0.01, 100);
    for (std::size_t k = 0; k < len; ++k) {
      x[k] = rng.uniform(0, 1);
      y[k] = rng.uniform(0, 1);
      xs[k] = s1 * x[k];
      ys[k] = s2 * y[k];
    }
    if (std::fabs(metrics::pair_distance(x, y).d - metrics::pair_distance(xs, ys).d) > 1e-9)
      return {false, fmt::format("scale invariance, pair {}", i)};
  }
  return {true, fmt::format("D([0.5,0.5],[0.8,0.2]) = {:.9f}", by_hand)};
}

Outcome table5() {
  auto& s = study();
  auto r = report::distortion_from_json(read_json(s.dir / "distortion.json"));
  if (r.rows.size() != published().size()) return {false, fmt::format("{} filters", r.rows.size())};
  double worst = 0;
  std::vector<std::string> breaking;
  for (const auto& row : r.rows) {
    const auto& label = s.labels.at(row.filter_id);
    worst = std::max(worst, std::fabs(row.mean_d - published().at(label).distance));
    if (row.breaking) breaking.push_back(label);
  }
  if (worst > 1e-6) return {false, fmt::format("max deviation {:.3g}", worst)};
  if (breaking != std::vector<std::string>{"Hipster Look Filter Snapchat"})
    return {false, fmt::format("breaking: {}", fmt::join(breaking, ", "))};
  if (s.seconds > 5) return {false, fmt::format("analyze took {:.2f} s", s.seconds)};
  return {true, fmt::format("max deviation {:.2g}, breaking = Hipster Look", worst)};
}

Outcome table6() {
  auto& s = study();
  auto r = report::age_deviation_from_json(read_json(s.dir / "age_deviation.json"));
  if (r.rows.size() != published().size()) return {false, fmt::format("{} filters", r.rows.size())};
  double worst = 0, worst_balance = 0;
  for (const auto& row : r.rows) {
    const auto& want = published().at(s.labels.at(row.filter_id));
    if (!row.defined) return {false, row.filter_id + " has no mispredictions"};
    worst = std::max({worst, std::fabs(row.avg_reduction - want.reduction), std::fabs(row.avg_increment - want.increment),
                      std::fabs(row.net_deviation - want.net)});
    const double n_total = static_cast<double>(row.n_under + row.n_over);
    const double balance = static_cast<double>(row.n_under) * row.avg_reduction +
                           static_cast<double>(row.n_over) * row.avg_increment - n_total * row.net_deviation;
    worst_balance = std::max(worst_balance, std::fabs(balance));
  }
  if (worst > 1e-5) return {false, fmt::format("max deviation {:.3g}", worst)};
  if (worst_balance > 1e-9) return {false, fmt::format("mass balance off by {:.3g}", worst_balance)};
  if (s.seconds > 5) return {false, fmt::format("analyze took {:.2f} s", s.seconds)};
  return {true, fmt::format("max deviation {:.2g}, mass balance within {:.1g}", worst, worst_balance)};
}

Outcome tables7_8() {
  auto& s = study();
  auto gender = report::mispredictions_from_json(read_json(s.dir / "gender_mispredictions.json"));
  auto eth = report::mispredictions_from_json(read_json(s.dir / "ethnicity_mispredictions.json"));
  if (gender.rows.size() != published().size() || eth.rows.size() != published().size())
    return {false, "wrong number of filters"};
  int checked = 0;
  for (const auto& row : gender.rows) {
    const auto& want = published().at(s.labels.at(row.filter_id));
    const auto& cm = row.confusion;
    const auto male = std::find(cm.classes.begin(), cm.classes.end(), "male") - cm.classes.begin();
    const auto female = std::find(cm.classes.begin(), cm.classes.end(), "female") - cm.classes.begin();
    if (row.count("male->female") != want.male_as_female || row.count("female->male") != want.female_as_male)
      return {false, "gender counts differ for " + row.filter_id};
    if (cm.counts[male][female] != want.male_as_female || cm.counts[female][male] != want.female_as_male)
      return {false, "gender confusion disagrees for " + row.filter_id};
    checked += 2;
  }
  for (const auto& row : eth.rows) {
    const auto& want = published().at(s.labels.at(row.filter_id));
    const auto& cm = row.confusion;
    for (std::size_t j = 0; j < cm.classes.size(); ++j) {
      std::int64_t column = 0;
      for (std::size_t i = 0; i < cm.classes.size(); ++i)
        if (i != j) column += cm.counts[i][j];
      const auto& cls = cm.classes[j];
      if (row.count(cls) != want.wrongly_as.at(cls)) return {false, "ethnicity count differs: " + row.filter_id + "/" + cls};
      if (column != want.wrongly_as.at(cls)) return {false, "ethnicity confusion disagrees: " + row.filter_id + "/" + cls};
      ++checked;
    }
  }
  if (s.seconds > 5) return {false, fmt::format("analyze took {:.2f} s", s.seconds)};
  return {true, fmt::format("{} counts exact", checked)};
}

Outcome model_shape() {
  const auto spec = nn::build_facefilternet(102);
  if (spec.feature_dim != 2048) return {false, fmt::format("feature_dim {}", spec.feature_dim)};
  nn::Model<float> model(spec, 1);
  Rng rng(6);
  const int total = 1000, batch = 8;
  const int size = spec.extractor->input_size;
  double worst = 0;
  for (int done = 0; done < total; done += batch) {
    const int n = std::min(batch, total - done);
    auto input = random_batch<float>(rng, n, size);
    auto feats = model.features(input);
    if (static_cast<int>(feats.sample_size()) != 2048) return {false, "feature width " + feats.shape_string()};
    auto out = model.head_outputs(feats);
    for (int i = 0; i < n; ++i) {
      if (out.sample_size() != 102) return {false, "output " + out.shape_string()};
      auto p = nn::softmax<float>(out.sample_span(i));
      worst = std::max(worst, std::fabs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    }
  }
  if (worst > 1e-5) return {false, fmt::format("softmax sum off by {:.3g}", worst)};
  return {true, fmt::format("{} inputs at {}x{}, max |sum - 1| = {:.2g}", total, size, size, worst)};
}

Outcome gradients() {
  auto r = gradient_check(60);
  if (r.failures) return {false, fmt::format("{} of {} weights, max rel error {:.3g}", r.failures, r.checked, r.max_rel_error)};
  return {true, fmt::format("{} weights, max rel error {:.2g}", r.checked, r.max_rel_error)};
}

Outcome overfit() {
  TempDir dir;
  fixtures::write_synthetic_dataset(dir.path());
  const auto m = dataset::load_manifest(dir / "manifest.jsonl");
  const auto cfg = train::parse_pipeline_config(fixtures::synthetic_config(3, 30));
  dataset::TrainTestSplit everything;
  for (const auto& im : m.images()) everything.train.push_back(im.image_id);
  if (everything.train.size() != 64 || m.num_identities() != 8) return {false, "synthetic set is not 8 x 8"};
  const auto spec = cfg.identity_spec(8);
  auto a = train::train_identity(m, everything, spec, cfg.identity);
  auto b = train::train_identity(m, everything, spec, cfg.identity);
  const double acc = a.report.final_train_metric;
  if (a.report.epochs.size() > 30) return {false, "more than 30 epochs"};
  if (std::fabs(acc - b.report.final_train_metric) > 1e-4) return {false, "re-run differs"};
  if (acc < 0.99) return {false, fmt::format("train accuracy {:.4f}", acc)};
  return {true, fmt::format("train accuracy {:.4f} after {} epochs, re-run identical", acc, a.report.epochs.size())};
}

Outcome pipeline_closure() {
  TempDir work;
  std::vector<std::string> outputs;
  for (int pass = 0; pass < 2; ++pass) {
    const auto root = work / ("run" + std::to_string(pass));
    fixtures::write_synthetic_dataset(root / "data");
    io::write_text(root / "data" / "train.cfg", fixtures::synthetic_config(5, 10));
    const auto manifest = (root / "data" / "manifest.jsonl").string();
    const std::vector<std::vector<std::string>> steps{
        {"validate", "--manifest", manifest},
        {"split", "--manifest", manifest, "--out", (root / "split.json").string()},
        {"train", "--manifest", manifest, "--split", (root / "split.json").string(), "--config",
         (root / "data" / "train.cfg").string(), "--out", (root / "ckpt").string()},
        {"predict", "--checkpoints", (root / "ckpt").string(), "--manifest", manifest, "--out",
         (root / "predictions.jsonl").string()},
        {"analyze", "--dump", (root / "predictions.jsonl").string(), "--manifest", manifest, "--split",
         (root / "split.json").string(), "--out", (root / "analysis").string()},
        {"report", "--analysis", (root / "analysis").string(), "--out", (root / "report").string()},
    };
    for (const auto& step : steps) {
      std::string err;
      const int status = run_cli(step, &err);
      if (status != 0) return {false, fmt::format("{} exited {}: {}", step[0], status, err)};
    }
    std::string all;
    for (const auto& f : cli::report_files()) all += f + "\n" + io::read_text(root / "report" / f);
    outputs.push_back(all);
  }
  if (outputs[0] != outputs[1]) return {false, "reports differ between runs"};
  return {true, fmt::format("{} report files byte-identical across two runs", cli::report_files().size())};
}

}  // namespace

// Optional arguments pick criteria by number, e.g. `acceptance 3 4 5`.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  criterion(1, "metric oracle equivalence", 10, metric_oracles);
  criterion(2, "normalized distance suite", 10, distance_suite);
  criterion(3, "filter distortion fixture", 5, table5);
  criterion(4, "age deviation fixture", 5, table6);
  criterion(5, "gender and ethnicity misprediction fixture", 5, tables7_8);
  criterion(6, "reference network shape and softmax", 120, model_shape);
  criterion(7, "gradient check", 120, gradients);
  criterion(8, "overfit smoke training", 600, overfit);
  criterion(9, "pipeline closure", 600, pipeline_closure);
  if (selected.empty() || selected.count(10))
    std::cout << "SKIP 10 full-dataset accuracy targets [not run] needs the real image set and GPU-scale training"
              << std::endl;
  return failures == 0 ? 0 : 1;
}
