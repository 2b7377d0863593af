#include "ffsense/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "ffsense/dataset/image.hpp"
#include "ffsense/error.hpp"
#include "ffsense/io.hpp"
#include "ffsense/nn/loss.hpp"
#include "ffsense/random.hpp"

namespace ffsense::train {

using nlohmann::json;

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    json j = {{"epoch", e.epoch}, {"loss", e.loss}, {"train_" + r.metric_name, e.train_metric}};
    j["test_" + r.metric_name] = e.test_metric ? json(*e.test_metric) : json(nullptr);
    epochs.push_back(std::move(j));
  }
  return {{"task", r.task},
          {"metric", r.metric_name},
          {"epochs", epochs},
          {"final_train_" + r.metric_name, r.final_train_metric},
          {"final_test_" + r.metric_name, r.final_test_metric ? json(*r.final_test_metric) : json(nullptr)},
          {"checkpoint_hash", r.checkpoint_hash},
          {"checkpoint", r.checkpoint_path},
          {"seed", r.seed},
          {"wall_seconds", r.wall_seconds}};
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}

void Optimizer::step(std::span<nn::Param<float>* const> params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (auto* p : params) {
    if (!p->trainable) continue;
    auto& [m, v] = state_[p];
    if (m.empty()) {
      m.assign(p->numel(), 0.0f);
      if (kind_ == OptimizerKind::adaptive_moment) v.assign(p->numel(), 0.0f);
    }
    if (kind_ == OptimizerKind::sgd_momentum) {
      for (std::size_t i = 0; i < p->numel(); ++i) {
        m[i] = static_cast<float>(kMomentum * m[i] + p->grad[i]);
        p->value[i] -= static_cast<float>(lr_ * m[i]);
      }
    } else {
      for (std::size_t i = 0; i < p->numel(); ++i) {
        const double g = p->grad[i];
        m[i] = static_cast<float>(kBeta1 * m[i] + (1.0 - kBeta1) * g);
        v[i] = static_cast<float>(kBeta2 * v[i] + (1.0 - kBeta2) * g * g);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p->value[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + kEps));
      }
    }
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1)));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

// ---------------------------------------------------------------------------
// Image inputs

ImageInputs::ImageInputs(const dataset::DatasetManifest& manifest, int input_size)
    : manifest_(manifest), input_size_(input_size), budget_bytes_(std::size_t{512} << 20) {}

const std::vector<float>& ImageInputs::get(const std::string& image_id) {
  if (auto it = cache_.find(image_id); it != cache_.end()) return it->second;
  if (!manifest_.has_image(image_id)) throw DomainError("missing image payload: unknown image id '" + image_id + "'");
  const auto& rec = manifest_.image(image_id);
  std::vector<float> chw;
  try {
    chw = dataset::to_network_input(dataset::load_image(manifest_.resolve(rec)), input_size_);
  } catch (const IoError& e) {
    throw IoError("missing image payload for '" + image_id + "': " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("bad image payload for '" + image_id + "': " + e.what());
  }
  const std::size_t bytes = chw.size() * sizeof(float);
  if (used_bytes_ + bytes <= budget_bytes_) {
    used_bytes_ += bytes;
    return cache_.emplace(image_id, std::move(chw)).first->second;
  }
  scratch_ = std::move(chw);
  return scratch_;
}

nn::Tensor<float> ImageInputs::batch(std::span<const std::string> image_ids) {
  nn::Tensor<float> t(static_cast<int>(image_ids.size()), 3, input_size_, input_size_);
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    const auto& chw = get(image_ids[i]);
    std::copy(chw.begin(), chw.end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generic fitting loop

namespace {

using BatchFn = std::function<nn::Tensor<float>(std::span<const std::size_t>)>;

struct FitData {
  std::size_t size = 0;
  BatchFn inputs;
  std::vector<int> classes;   // classifier targets
  std::vector<double> values;  // regression targets
};

double clamp_age(double a) { return std::isfinite(a) ? std::clamp(a, 0.0, nn::kMaxAge) : 0.0; }

double evaluate(const nn::Model<float>& model, const FitData& data, bool regression, int batch_size) {
  double acc = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size; start += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(data.size, start + static_cast<std::size_t>(batch_size));
    idx.clear();
    for (auto i = start; i < end; ++i) idx.push_back(i);
    auto out = model.outputs(data.inputs(idx));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (regression) {
        acc += std::abs(clamp_age(out.sample(static_cast<int>(k))[0]) - data.values[idx[k]]);
      } else {
        auto p = nn::softmax(out.sample_span(static_cast<int>(k)));
        acc += static_cast<int>(nn::argmax(p)) == data.classes[idx[k]] ? 1.0 : 0.0;
      }
    }
  }
  return acc / static_cast<double>(data.size);
}

std::vector<double> inverse_frequency(const std::vector<int>& classes, int num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (int c : classes) counts[c] += 1.0;
  std::vector<double> w(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] > 0) w[c] = static_cast<double>(classes.size()) / (num_classes * counts[c]);
  return w;
}

void check_loss(nn::HeadKind kind, const TrainConfig& cfg) {
  const bool regression = kind == nn::HeadKind::age_regression;
  if (regression && cfg.loss == nn::LossKind::cross_entropy)
    throw DomainError("age head must use mse or mae loss");
  if (!regression && cfg.loss != nn::LossKind::cross_entropy)
    throw DomainError("classification heads must use cross_entropy loss");
}

TrainReport fit(nn::Model<float>& model, const FitData& train, const FitData* test, const TrainConfig& cfg,
                nn::HeadKind kind) {
  cfg.validate();
  check_loss(kind, cfg);
  if (train.size == 0) throw DomainError("training set is empty");
  const bool regression = kind == nn::HeadKind::age_regression;
  const auto started = std::chrono::steady_clock::now();

  std::vector<double> class_weights;
  if (!regression && cfg.class_weighting)
    class_weights = inverse_frequency(train.classes, model.spec().head.output_width());

  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  auto params = model.trainable_parameters();
  TrainReport report;
  report.metric_name = regression ? "mae" : "accuracy";
  report.seed = cfg.seed;

  std::vector<std::size_t> batch_idx;
  std::vector<int> batch_classes;
  std::vector<double> batch_values;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(train.size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
      model.zero_grad();
      auto out = model.forward_train(train.inputs(batch_idx));
      nn::Tensor<float> grad;
      nn::LossResult loss;
      if (regression) {
        batch_values.clear();
        for (auto i : batch_idx) batch_values.push_back(train.values[i]);
        loss = nn::regression_loss(cfg.loss, out, batch_values, grad);
      } else {
        batch_classes.clear();
        for (auto i : batch_idx) batch_classes.push_back(train.classes[i]);
        loss = nn::cross_entropy(out, batch_classes, class_weights, grad);
      }
      model.backward(grad);
      opt.step(params);
      loss_sum += loss.value * static_cast<double>(batch_idx.size());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = loss_sum / static_cast<double>(train.size);
    rec.train_metric = evaluate(model, train, regression, cfg.batch_size);
    if (test && test->size > 0) rec.test_metric = evaluate(model, *test, regression, cfg.batch_size);
    report.epochs.push_back(rec);
  }
  report.final_train_metric = report.epochs.back().train_metric;
  report.final_test_metric = report.epochs.back().test_metric;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

FitData image_fit_data(ImageInputs& inputs, const std::vector<std::string>& ids) {
  FitData d;
  d.size = ids.size();
  d.inputs = [&inputs, &ids](std::span<const std::size_t> idx) {
    std::vector<std::string> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(ids[i]);
    return inputs.batch(batch);
  };
  return d;
}

int class_index(nn::HeadKind kind, const std::string& label) {
  if (kind == nn::HeadKind::gender_softmax) {
    if (auto g = dataset::parse_gender(label)) return static_cast<int>(*g);
    throw DomainError("gender label '" + label + "' is not male/female");
  }
  if (auto e = dataset::parse_ethnicity(label)) return static_cast<int>(*e);
  throw DomainError("ethnicity label '" + label + "' is not one of east_asian, west_asian, black, white");
}

void fill_targets(FitData& d, const AttributeLabels& labels, nn::HeadKind kind) {
  if (kind == nn::HeadKind::identity_softmax) throw DomainError("identity is not an attribute head");
  if (kind == nn::HeadKind::age_regression) {
    const auto* ages = std::get_if<std::vector<double>>(&labels);
    if (!ages) throw DomainError("age head needs numeric labels");
    for (double a : *ages)
      if (!std::isfinite(a) || a < 0.0) throw DomainError("age label " + std::to_string(a) + " is not a valid age");
    d.values = *ages;
  } else {
    const auto* names = std::get_if<std::vector<std::string>>(&labels);
    if (!names) throw DomainError(std::string(nn::to_string(kind)) + " head needs class labels");
    for (const auto& n : *names) d.classes.push_back(class_index(kind, n));
  }
}

FitData feature_fit_data(const LabeledFeatures& data, nn::HeadKind kind) {
  FitData d;
  d.size = data.features.size();
  fill_targets(d, data.labels, kind);
  const auto n_labels = kind == nn::HeadKind::age_regression ? d.values.size() : d.classes.size();
  if (n_labels != d.size)
    throw DomainError("got " + std::to_string(d.size) + " feature vectors but " + std::to_string(n_labels) + " labels");
  const auto dim = d.size ? data.features.front().values.size() : 0;
  for (const auto& f : data.features)
    if (f.values.size() != dim) throw ShapeError("feature vectors have inconsistent widths");
  d.inputs = [&data, dim](std::span<const std::size_t> idx) {
    nn::Tensor<float> t(static_cast<int>(idx.size()), static_cast<int>(dim), 1, 1);
    for (std::size_t k = 0; k < idx.size(); ++k)
      std::copy(data.features[idx[k]].values.begin(), data.features[idx[k]].values.end(),
                t.sample(static_cast<int>(k)));
    return t;
  };
  return d;
}

TrainConfig with_head_loss(TrainConfig cfg, nn::HeadKind kind) {
  if (kind != nn::HeadKind::age_regression) cfg.loss = nn::LossKind::cross_entropy;
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------

TrainResult train_identity(const dataset::DatasetManifest& manifest, const dataset::TrainTestSplit& split,
                           const nn::NetworkSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw DomainError("split has an empty train set");
  if (!spec.extractor) throw DomainError("identity network needs a feature extractor");
  if (spec.head.kind != nn::HeadKind::identity_softmax) throw DomainError("identity network needs an identity head");
  if (spec.head.num_classes != static_cast<int>(manifest.num_identities()))
    throw DomainError("identity head has " + std::to_string(spec.head.num_classes) + " classes but the manifest has " +
                      std::to_string(manifest.num_identities()) + " subjects");

  nn::Model<float> model(spec, cfg.seed);
  if (!spec.extractor->backbone.pretrained.empty())
    nn::load_pretrained_backbone(model, spec.extractor->backbone.pretrained);

  ImageInputs inputs(manifest, spec.extractor->input_size);
  auto train = image_fit_data(inputs, split.train);
  auto test = image_fit_data(inputs, split.test);
  for (const auto& id : split.train) train.classes.push_back(static_cast<int>(manifest.identity_index(manifest.image(id).subject_id)));
  for (const auto& id : split.test) test.classes.push_back(static_cast<int>(manifest.identity_index(manifest.image(id).subject_id)));

  TrainConfig id_cfg = cfg;
  id_cfg.loss = nn::LossKind::cross_entropy;
  auto report = fit(model, train, &test, id_cfg, nn::HeadKind::identity_softmax);
  report.task = "identity";
  TrainResult result{nn::make_checkpoint(model, {cfg.seed, {}}), std::move(report)};
  return result;
}

// ---------------------------------------------------------------------------
// Feature cache

const nn::FeatureVector& FeatureTable::at(const std::string& image_id) const {
  for (std::size_t i = 0; i < image_ids.size(); ++i)
    if (image_ids[i] == image_id) return features[i];
  throw DomainError("no features for image '" + image_id + "'");
}

std::filesystem::path feature_cache_dir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("FFSENSE_CACHE_DIR"); env && *env) return env;
  return fallback;
}

namespace {

std::map<std::string, std::string> read_cache_index(const std::filesystem::path& index) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(index)) return out;
  std::istringstream in(io::read_text(index));
  std::string line;
  while (std::getline(in, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

}  // namespace

FeatureTable precompute_features(const nn::Checkpoint& checkpoint, const dataset::DatasetManifest& manifest,
                                 std::span<const std::string> image_ids, const std::filesystem::path& cache_dir,
                                 CacheStats* stats) {
  if (!checkpoint.spec.extractor) throw DomainError("feature extraction needs a checkpoint with an extractor");
  const auto dir = cache_dir / nn::checkpoint_hash(checkpoint);
  const auto index_path = dir / "index.tsv";
  auto index = read_cache_index(index_path);
  const auto dim = static_cast<std::size_t>(checkpoint.spec.feature_dim);

  FeatureTable table;
  table.image_ids.assign(image_ids.begin(), image_ids.end());
  table.features.resize(image_ids.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    auto it = index.find(image_ids[i]);
    if (it != index.end() && std::filesystem::exists(dir / it->second)) {
      auto bytes = io::read_bytes(dir / it->second);
      if (bytes.size() == dim * sizeof(float)) {
        table.features[i].values.resize(dim);
        std::memcpy(table.features[i].values.data(), bytes.data(), bytes.size());
        if (stats) ++stats->hits;
        continue;
      }
    }
    missing.push_back(i);
  }
  if (missing.empty()) return table;

  auto model = nn::instantiate(checkpoint);
  ImageInputs inputs(manifest, checkpoint.spec.extractor->input_size);
  constexpr std::size_t kChunk = 8;
  for (std::size_t start = 0; start < missing.size(); start += kChunk) {
    std::vector<std::string> ids;
    for (auto k = start; k < std::min(missing.size(), start + kChunk); ++k) ids.push_back(image_ids[missing[k]]);
    auto feats = model.features(inputs.batch(ids));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto& fv = table.features[missing[start + k]];
      auto row = feats.sample_span(static_cast<int>(k));
      fv.values.assign(row.begin(), row.end());
      const auto file = io::sha256_hex(ids[k]).substr(0, 32) + ".f32";
      std::vector<std::uint8_t> bytes(fv.values.size() * sizeof(float));
      std::memcpy(bytes.data(), fv.values.data(), bytes.size());
      io::write_bytes(dir / file, bytes);
      index[ids[k]] = file;
      if (stats) ++stats->computed;
    }
  }
  std::string text;
  for (const auto& [id, file] : index) text += id + "\t" + file + "\n";
  io::write_text(index_path, text);
  return table;
}

// ---------------------------------------------------------------------------
// Attribute heads

TrainResult train_attribute_head(const LabeledFeatures& train, nn::HeadKind kind, const TrainConfig& cfg,
                                 const std::vector<int>& hidden, const LabeledFeatures* test) {
  if (kind == nn::HeadKind::identity_softmax) throw DomainError("identity is not an attribute head");
  if (train.features.empty()) throw DomainError("training set is empty");
  auto head_cfg = with_head_loss(cfg, kind);
  auto train_data = feature_fit_data(train, kind);
  std::optional<FitData> test_data;
  if (test) test_data = feature_fit_data(*test, kind);

  const int dim = static_cast<int>(train.features.front().values.size());
  nn::Model<float> model(nn::build_attribute_head(kind, hidden, dim), cfg.seed);
  auto report = fit(model, train_data, test_data ? &*test_data : nullptr, head_cfg, kind);
  report.task = kind == nn::HeadKind::age_regression ? "age"
                : kind == nn::HeadKind::gender_softmax ? "gender"
                                                       : "ethnicity";
  return {nn::make_checkpoint(model, {cfg.seed, {}}), std::move(report)};
}

TrainResult fine_tune_attribute(const nn::Checkpoint& identity, const dataset::DatasetManifest& manifest,
                                const dataset::TrainTestSplit& split, nn::HeadKind kind, const TrainConfig& cfg,
                                const std::vector<int>& hidden) {
  if (!identity.spec.extractor) throw DomainError("fine-tuning needs an identity checkpoint with an extractor");
  if (kind == nn::HeadKind::identity_softmax) throw DomainError("identity is not an attribute head");
  if (split.train.empty()) throw DomainError("split has an empty train set");
  auto head_cfg = with_head_loss(cfg, kind);

  nn::NetworkSpec spec = nn::build_attribute_head(kind, hidden, identity.spec.feature_dim);
  spec.extractor = identity.spec.extractor;
  nn::Model<float> model(spec, cfg.seed);
  nn::TensorStore extractor_weights;
  for (const auto& [name, rec] : identity.weights)
    if (name.rfind("head.", 0) != 0) extractor_weights.emplace(name, rec);
  for (auto* p : model.extractor_parameters())
    if (!extractor_weights.contains(p->name)) throw ShapeError("tensor '" + p->name + "' missing from identity weights");
  model.import_matching(extractor_weights, "");
  model.set_extractor_frozen(cfg.freeze_extractor);

  ImageInputs inputs(manifest, spec.extractor->input_size);
  auto train = image_fit_data(inputs, split.train);
  auto test = image_fit_data(inputs, split.test);
  fill_targets(train, attribute_labels(manifest, split.train, kind), kind);
  fill_targets(test, attribute_labels(manifest, split.test, kind), kind);
  auto report = fit(model, train, &test, head_cfg, kind);
  report.task = std::string(nn::to_string(kind));
  return {nn::make_checkpoint(model, {cfg.seed, {}}), std::move(report)};
}

AttributeLabels attribute_labels(const dataset::DatasetManifest& manifest, std::span<const std::string> image_ids,
                                 nn::HeadKind kind) {
  if (kind == nn::HeadKind::age_regression) {
    std::vector<double> ages;
    for (const auto& id : image_ids) ages.push_back(manifest.subject(manifest.image(id).subject_id).age);
    return ages;
  }
  std::vector<std::string> labels;
  for (const auto& id : image_ids) {
    const auto& s = manifest.subject(manifest.image(id).subject_id);
    labels.emplace_back(kind == nn::HeadKind::gender_softmax ? dataset::to_string(s.gender)
                                                             : dataset::to_string(s.ethnicity));
  }
  return labels;
}

}  // namespace ffsense::train
