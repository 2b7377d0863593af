#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ffsense/cli/cli.hpp"
#include "ffsense/dataset/image.hpp"
#include "ffsense/dataset/manifest.hpp"
#include "ffsense/dataset/split.hpp"
#include "ffsense/error.hpp"
#include "ffsense/io.hpp"
#include "ffsense/metrics/metrics.hpp"
#include "ffsense/nn/checkpoint.hpp"
#include "ffsense/nn/inference.hpp"
#include "ffsense/nn/loss.hpp"
#include "ffsense/report/report.hpp"
#include "ffsense/report/serialize.hpp"
#include "ffsense/train/config.hpp"
#include "ffsense/train/trainer.hpp"

namespace ffsense::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Maps the exception hierarchy onto the exit status contract.
template <typename F>
int guarded(Streams io, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DomainError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const json::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::bad_alloc&) {
    io.err << "error: out of memory\n";
    return kExitDomain;
  }
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const auto text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

const char* kind_name(nn::HeadKind kind) {
  switch (kind) {
    case nn::HeadKind::age_regression:
      return "age";
    case nn::HeadKind::gender_softmax:
      return "gender";
    case nn::HeadKind::ethnicity_softmax:
      return "ethnicity";
    default:
      return "identity";
  }
}

constexpr nn::HeadKind kAttributeKinds[] = {nn::HeadKind::age_regression, nn::HeadKind::gender_softmax,
                                            nn::HeadKind::ethnicity_softmax};

std::string metric_summary(const train::TrainReport& r) {
  auto s = fmt::format("{}: train {} {:.6f}", r.task, r.metric_name, r.final_train_metric);
  if (r.final_test_metric) s += fmt::format(", test {} {:.6f}", r.metric_name, *r.final_test_metric);
  return s;
}

}  // namespace

const std::vector<std::string>& analysis_files() {
  static const std::vector<std::string> files{
      "filters.json",           "classification_identity.json", "classification_gender.json",
      "classification_ethnicity.json", "regression_age.json",   "distortion.json",
      "age_deviation.json",     "gender_mispredictions.json",   "ethnicity_mispredictions.json"};
  return files;
}

const std::vector<std::string>& report_files() {
  static const std::vector<std::string> files{
      "distortion.md",          "distortion.csv",          "age_deviation.md",          "age_deviation.csv",
      "gender_mispredictions.md", "gender_mispredictions.csv", "ethnicity_mispredictions.md",
      "ethnicity_mispredictions.csv", "confusion_gender.txt", "confusion_ethnicity.txt", "usability.md"};
  return files;
}

// ---------------------------------------------------------------------------

int cmd_validate(const fs::path& manifest, Streams io) {
  return guarded(io, [&] {
    const auto check = dataset::check_manifest_text(io::read_text(manifest));
    if (!check.diagnostics.empty()) {
      for (const auto& d : check.diagnostics) {
        io.err << manifest.string();
        if (d.line) io.err << ":" << d.line;
        io.err << ": " << d.message << "\n";
      }
      return kExitDomain;
    }
    io.out << "OK: " << check.manifest->subjects().size() << " subjects, " << check.manifest->images().size()
           << " images\n";
    return kExitOk;
  });
}

int cmd_split(const SplitOptions& opts, Streams io) {
  return guarded(io, [&] {
    const auto manifest = dataset::load_manifest(opts.manifest);
    const auto split = dataset::split_train_test(manifest, {opts.fraction, opts.seed, opts.stratified});
    dataset::save_split(split, opts.out);
    io.out << "split: " << split.train.size() << " train, " << split.test.size() << " test\n";
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& opts, Streams io) {
  return guarded(io, [&] {
    const auto manifest = dataset::load_manifest(opts.manifest);
    const auto split = dataset::load_split(opts.split);
    auto cfg = train::load_pipeline_config(opts.config);
    if (opts.seed) {
      cfg.identity.seed = *opts.seed;
      cfg.head.seed = *opts.seed;
    }
    for (const auto* ids : {&split.train, &split.test})
      for (const auto& id : *ids)
        if (!manifest.has_image(id)) throw DanglingReference(id);

    auto finish = [&](train::TrainResult& result, const std::string& name) {
      result.checkpoint.fingerprint = {result.report.seed, cfg.config_hash};
      nn::save_checkpoint(result.checkpoint, opts.out / (name + ".ckpt"));
      result.report.checkpoint_hash = nn::checkpoint_hash(result.checkpoint);
      result.report.checkpoint_path = name + ".ckpt";
      write_json(opts.out / (name + "_report.json"), train::to_json(result.report));
      io.out << metric_summary(result.report) << "\n";
    };

    auto identity = train::train_identity(manifest, split, cfg.identity_spec(static_cast<int>(manifest.num_identities())),
                                          cfg.identity);
    finish(identity, "identity");

    std::optional<train::FeatureTable> train_features, test_features;
    if (cfg.identity.freeze_extractor) {
      const auto cache = train::feature_cache_dir(opts.out / "feature_cache");
      train::CacheStats stats;
      train_features = train::precompute_features(identity.checkpoint, manifest, split.train, cache, &stats);
      test_features = train::precompute_features(identity.checkpoint, manifest, split.test, cache, &stats);
      io.out << "features: " << stats.computed << " computed, " << stats.hits << " cached\n";
    }

    for (auto kind : kAttributeKinds) {
      auto head_cfg = cfg.head;
      head_cfg.loss = kind == nn::HeadKind::age_regression ? cfg.age_loss : nn::LossKind::cross_entropy;
      train::TrainResult result;
      if (cfg.identity.freeze_extractor) {
        train::LabeledFeatures tr{train_features->features, train::attribute_labels(manifest, split.train, kind)};
        train::LabeledFeatures te{test_features->features, train::attribute_labels(manifest, split.test, kind)};
        result = train::train_attribute_head(tr, kind, head_cfg, cfg.head_hidden, split.test.empty() ? nullptr : &te);
      } else {
        result = train::fine_tune_attribute(identity.checkpoint, manifest, split, kind, head_cfg, cfg.head_hidden);
      }
      finish(result, kind_name(kind));
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_predict(const PredictOptions& opts, Streams io) {
  return guarded(io, [&] {
    const auto manifest = dataset::load_manifest(opts.manifest);
    std::vector<std::string> ids;
    if (opts.ids) {
      std::istringstream in(io::read_text(*opts.ids));
      std::string line;
      while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
      }
    } else if (opts.split) {
      const auto split = dataset::load_split(*opts.split);
      if (opts.subset != Subset::test) ids.insert(ids.end(), split.train.begin(), split.train.end());
      if (opts.subset != Subset::train) ids.insert(ids.end(), split.test.begin(), split.test.end());
    } else {
      for (const auto& im : manifest.images()) ids.push_back(im.image_id);
    }

    std::vector<DumpEntry> entries;
    std::size_t failures = 0;
    if (!ids.empty()) {
      const auto identity = nn::load_checkpoint(opts.checkpoints / "identity.ckpt");
      const nn::HeadCheckpoints heads{nn::load_checkpoint(opts.checkpoints / "age.ckpt"),
                                      nn::load_checkpoint(opts.checkpoints / "gender.ckpt"),
                                      nn::load_checkpoint(opts.checkpoints / "ethnicity.ckpt")};
      const nn::Recognizer recognizer(identity);
      const nn::AttributePredictor attributes(identity, heads);
      for (const auto& id : ids) {
        DumpEntry e;
        e.image_id = id;
        try {
          if (!manifest.has_image(id)) throw DanglingReference(id);
          const auto& rec = manifest.image(id);
          const auto image = dataset::load_image(manifest.resolve(rec));
          const auto dist = recognizer.predict_identity(image);
          const auto attr = attributes.predict(image);
          PredictionRecord p;
          p.image_id = id;
          p.subject_id = rec.subject_id;
          p.filter_id = rec.filter_id;
          p.identity_probs = dist.probs;
          p.predicted_identity = dist.predicted();
          p.age_pred = attr.age;
          p.gender_probs.assign(attr.gender_probs.begin(), attr.gender_probs.end());
          p.ethnicity_probs.assign(attr.ethnicity_probs.begin(), attr.ethnicity_probs.end());
          e.record = std::move(p);
        } catch (const std::runtime_error& err) {
          e.error = err.what();
          ++failures;
          io.err << "error: " << id << ": " << err.what() << "\n";
        }
        entries.push_back(std::move(e));
      }
    }
    write_dump(entries, opts.out);
    io.out << "predicted " << entries.size() - failures << " of " << entries.size() << " images\n";
    return failures ? kExitDomain : kExitOk;
  });
}

// ---------------------------------------------------------------------------

namespace {

std::string argmax_class(const std::vector<double>& probs, const std::vector<std::string>& classes,
                         const std::string& what, const std::string& image_id) {
  if (probs.size() != classes.size())
    throw DomainError(fmt::format("{} for '{}' has {} entries, expected {}", what, image_id, probs.size(),
                                  classes.size()));
  return classes[nn::argmax(probs)];
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opts, Streams io) {
  return guarded(io, [&] {
    const auto manifest = dataset::load_manifest(opts.manifest);
    const auto entries = read_dump(opts.dump);

    std::map<std::string, const PredictionRecord*> by_image;
    std::size_t skipped = 0;
    for (const auto& e : entries) {
      if (!e.record) {
        ++skipped;
        continue;
      }
      const auto& r = *e.record;
      if (!manifest.has_image(r.image_id)) throw DanglingReference(r.image_id);
      const auto& rec = manifest.image(r.image_id);
      if (rec.subject_id != r.subject_id || rec.filter_id != r.filter_id)
        throw DomainError("prediction for '" + r.image_id + "' disagrees with the manifest on subject or filter");
      if (r.identity_probs.size() != manifest.num_identities())
        throw DomainError(fmt::format("identity_probs for '{}' has {} entries, manifest has {} subjects", r.image_id,
                                      r.identity_probs.size(), manifest.num_identities()));
      if (!by_image.emplace(r.image_id, &r).second) throw DuplicateId(r.image_id);
    }
    if (skipped) io.err << "warning: skipped " << skipped << " error records\n";

    std::optional<std::set<std::string>> scope;
    if (opts.split) {
      const auto split = dataset::load_split(*opts.split);
      scope.emplace(split.test.begin(), split.test.end());
    }

    const auto& gender_classes = dataset::gender_classes();
    const auto& ethnicity_classes = dataset::ethnicity_classes();

    // Classification and regression over every (in-scope) prediction.
    std::vector<std::string> id_actual, id_pred, g_actual, g_pred, e_actual, e_pred;
    std::vector<double> age_actual, age_pred;
    for (const auto& e : entries) {
      if (!e.record || (scope && !scope->contains(e.image_id))) continue;
      const auto& r = *e.record;
      const auto& subject = manifest.subject(r.subject_id);
      id_actual.push_back(r.subject_id);
      id_pred.push_back(manifest.subjects()[r.predicted_identity].subject_id);
      g_actual.emplace_back(dataset::to_string(subject.gender));
      g_pred.push_back(argmax_class(r.gender_probs, gender_classes, "gender_probs", r.image_id));
      e_actual.emplace_back(dataset::to_string(subject.ethnicity));
      e_pred.push_back(argmax_class(r.ethnicity_probs, ethnicity_classes, "ethnicity_probs", r.image_id));
      age_actual.push_back(subject.age);
      age_pred.push_back(r.age_pred);
    }
    if (id_actual.empty()) throw DomainError("no predictions to analyze");

    std::vector<std::string> identity_classes;
    for (const auto& s : manifest.subjects()) identity_classes.push_back(s.subject_id);

    json regression;
    try {
      regression = report::to_json(metrics::regression_report(age_actual, age_pred));
    } catch (const DomainError&) {
      regression = {{"r2", nullptr},
                    {"mae", metrics::mean_absolute_error(age_actual, age_pred)},
                    {"mse", metrics::mean_squared_error(age_actual, age_pred)}};
    }

    // Filter analysis: every filtered prediction against its subject's baseline.
    std::map<std::string, std::string> baseline_of;
    for (const auto& im : manifest.images())
      if (im.is_baseline()) baseline_of.emplace(im.subject_id, im.image_id);

    std::vector<metrics::DistortionPair> pairs;
    std::vector<metrics::AgeSample> ages;
    std::map<std::string, metrics::FilterLabels> gender_rows, ethnicity_rows;
    for (const auto& e : entries) {
      if (!e.record || e.record->filter_id == dataset::kNoFilter) continue;
      const auto& r = *e.record;
      auto b = baseline_of.find(r.subject_id);
      if (b == baseline_of.end() || !by_image.contains(b->second))
        throw DomainError("missing baseline prediction for subject '" + r.subject_id + "' (needed by '" + r.image_id +
                          "')");
      const auto& base = *by_image.at(b->second);
      pairs.push_back({base.identity_probs, r.identity_probs, r.filter_id});
      const auto& subject = manifest.subject(r.subject_id);
      ages.push_back({static_cast<double>(subject.age), r.age_pred, r.filter_id});
      auto& g = gender_rows[r.filter_id];
      g.filter_id = r.filter_id;
      g.actual.emplace_back(dataset::to_string(subject.gender));
      g.predicted.push_back(argmax_class(r.gender_probs, gender_classes, "gender_probs", r.image_id));
      auto& eth = ethnicity_rows[r.filter_id];
      eth.filter_id = r.filter_id;
      eth.actual.emplace_back(dataset::to_string(subject.ethnicity));
      eth.predicted.push_back(argmax_class(r.ethnicity_probs, ethnicity_classes, "ethnicity_probs", r.image_id));
    }

    std::vector<std::string> filter_order;
    std::vector<metrics::FilterLabels> g_labels, e_labels;
    json filters = json::array();
    const auto labels = report::filter_labels(manifest);
    for (const auto& f : manifest.filters()) {
      if (!gender_rows.contains(f.filter_id)) continue;
      filter_order.push_back(f.filter_id);
      g_labels.push_back(gender_rows.at(f.filter_id));
      e_labels.push_back(ethnicity_rows.at(f.filter_id));
      filters.push_back({{"filter_id", f.filter_id}, {"label", labels.at(f.filter_id)}});
    }

    const auto distortion = metrics::filter_distortion(pairs, opts.threshold, filter_order);
    fs::create_directories(opts.out);
    write_json(opts.out / "filters.json", filters);
    write_json(opts.out / "classification_identity.json",
               report::to_json(metrics::classification_report(id_actual, id_pred, metrics::Averaging::macro,
                                                              identity_classes)));
    write_json(opts.out / "classification_gender.json",
               report::to_json(
                   metrics::classification_report(g_actual, g_pred, metrics::Averaging::macro, gender_classes)));
    write_json(opts.out / "classification_ethnicity.json",
               report::to_json(
                   metrics::classification_report(e_actual, e_pred, metrics::Averaging::macro, ethnicity_classes)));
    write_json(opts.out / "regression_age.json", regression);
    write_json(opts.out / "distortion.json", report::to_json(distortion));
    write_json(opts.out / "age_deviation.json", report::to_json(metrics::age_deviation(ages, filter_order)));
    write_json(opts.out / "gender_mispredictions.json",
               report::to_json(metrics::misprediction_tables(g_labels, metrics::Task::gender)));
    write_json(opts.out / "ethnicity_mispredictions.json",
               report::to_json(metrics::misprediction_tables(e_labels, metrics::Task::ethnicity)));

    io.out << "analyzed " << id_actual.size() << " predictions, " << pairs.size() << " filtered pairs; breaking:";
    bool any = false;
    for (const auto& row : distortion.rows)
      if (row.breaking) {
        io.out << " " << row.filter_id;
        any = true;
      }
    io.out << (any ? "\n" : " none\n");
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_report(const ReportOptions& opts, Streams io) {
  return guarded(io, [&] {
    std::vector<std::string> missing;
    for (const auto& f : analysis_files())
      if (!fs::exists(opts.analysis / f)) missing.push_back(f);
    if (!missing.empty())
      throw IoError(fmt::format("analysis directory {} is missing: {}", opts.analysis.string(),
                                fmt::join(missing, ", ")));

    std::optional<report::Format> only;
    if (opts.format) {
      only = report::parse_format(*opts.format);
      if (!only) throw DomainError("unknown format '" + *opts.format + "', expected markdown or csv");
    }

    report::FilterLabels labels;
    for (const auto& f : read_json(opts.analysis / "filters.json"))
      labels.emplace(f.at("filter_id").get<std::string>(), f.at("label").get<std::string>());
    const auto distortion = report::distortion_from_json(read_json(opts.analysis / "distortion.json"));
    const auto age = report::age_deviation_from_json(read_json(opts.analysis / "age_deviation.json"));
    const auto gender = report::mispredictions_from_json(read_json(opts.analysis / "gender_mispredictions.json"));
    const auto ethnicity =
        report::mispredictions_from_json(read_json(opts.analysis / "ethnicity_mispredictions.json"));

    auto emit = [&](const std::string& stem, const report::Table& table) {
      for (auto format : {report::Format::markdown, report::Format::csv}) {
        if (only && *only != format) continue;
        const auto ext = format == report::Format::markdown ? ".md" : ".csv";
        io::write_text(opts.out / (stem + ext), report::render(table, format));
      }
    };
    emit("distortion", report::to_table(distortion, labels));
    emit("age_deviation", report::to_table(age, labels));
    emit("gender_mispredictions", report::to_table(gender, labels));
    emit("ethnicity_mispredictions", report::to_table(ethnicity, labels));

    auto grid = [&](const metrics::MispredictionTable& t) {
      std::vector<std::pair<std::string, metrics::ConfusionMatrix>> m;
      for (const auto& row : t.rows) m.emplace_back(row.filter_id, row.confusion);
      return report::render_confusion_grid(m, labels);
    };
    io::write_text(opts.out / "confusion_gender.txt", grid(gender));
    io::write_text(opts.out / "confusion_ethnicity.txt", grid(ethnicity));
    io::write_text(opts.out / "usability.md", report::usability_report(distortion, age, gender, ethnicity, labels).document);
    io.out << "wrote report to " << opts.out.string() << "\n";
    return kExitOk;
  });
}

}  // namespace ffsense::cli
