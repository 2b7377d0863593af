#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ffsense/dataset/manifest.hpp"
#include "ffsense/dataset/split.hpp"
#include "ffsense/nn/checkpoint.hpp"
#include "ffsense/nn/inference.hpp"
#include "ffsense/train/config.hpp"

namespace ffsense::train {

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;          // mean training loss over the epoch's batches
  double train_metric = 0.0;  // accuracy, or MAE for age; inference mode, end of epoch
  std::optional<double> test_metric;
};

struct TrainReport {
  std::string task;         // identity, age, gender, ethnicity
  std::string metric_name;  // accuracy or mae
  std::vector<EpochRecord> epochs;
  double final_train_metric = 0.0;
  std::optional<double> final_test_metric;
  std::string checkpoint_hash;
  std::string checkpoint_path;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const TrainReport& report);

// ---------------------------------------------------------------------------
// Optimizers

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  void step(std::span<nn::Param<float>* const> params);

  static constexpr double kMomentum = 0.9;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  OptimizerKind kind_;
  double lr_;
  long long t_ = 0;
  std::map<const nn::Param<float>*, std::pair<std::vector<float>, std::vector<float>>> state_;
};

// Batch order for an epoch: a permutation that depends only on (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// ---------------------------------------------------------------------------
// Identity network

// Decodes and preprocesses manifest images, memoizing when the set is small.
class ImageInputs {
 public:
  ImageInputs(const dataset::DatasetManifest& manifest, int input_size);
  // CHW input for one image; throws IoError/DomainError naming the image.
  const std::vector<float>& get(const std::string& image_id);
  nn::Tensor<float> batch(std::span<const std::string> image_ids);

 private:
  const dataset::DatasetManifest& manifest_;
  int input_size_;
  std::size_t budget_bytes_;
  std::size_t used_bytes_ = 0;
  std::map<std::string, std::vector<float>> cache_;
  std::vector<float> scratch_;
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  TrainReport report;
};

// Trains the identity softmax end-to-end. Per-epoch test accuracy is reported
// when the split has a test half.
TrainResult train_identity(const dataset::DatasetManifest& manifest, const dataset::TrainTestSplit& split,
                           const nn::NetworkSpec& spec, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Feature cache

struct FeatureTable {
  std::vector<std::string> image_ids;
  std::vector<nn::FeatureVector> features;

  const nn::FeatureVector& at(const std::string& image_id) const;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t computed = 0;
};

// Cache layout: <cache_dir>/<checkpoint hash>/index.tsv maps image_id to a
// raw little-endian float32 file in the same directory.
FeatureTable precompute_features(const nn::Checkpoint& checkpoint, const dataset::DatasetManifest& manifest,
                                 std::span<const std::string> image_ids, const std::filesystem::path& cache_dir,
                                 CacheStats* stats = nullptr);

// FFSENSE_CACHE_DIR when set, otherwise fallback.
std::filesystem::path feature_cache_dir(const std::filesystem::path& fallback);

// ---------------------------------------------------------------------------
// Attribute heads

// Ages (years) for age_regression, class names for the softmax heads.
using AttributeLabels = std::variant<std::vector<double>, std::vector<std::string>>;

struct LabeledFeatures {
  std::vector<nn::FeatureVector> features;
  AttributeLabels labels;
};

// Head-only training on frozen features. Throws DomainError for labels outside
// the head's domain.
TrainResult train_attribute_head(const LabeledFeatures& train, nn::HeadKind kind, const TrainConfig& cfg,
                                 const std::vector<int>& hidden = {nn::kDefaultHeadHidden},
                                 const LabeledFeatures* test = nullptr);

// Trains an attribute head on top of a copy of the identity extractor, from
// images. With cfg.freeze_extractor the copied extractor stays bitwise equal.
TrainResult fine_tune_attribute(const nn::Checkpoint& identity, const dataset::DatasetManifest& manifest,
                                const dataset::TrainTestSplit& split, nn::HeadKind kind, const TrainConfig& cfg,
                                const std::vector<int>& hidden = {nn::kDefaultHeadHidden});

// Ground-truth attribute labels for image ids, in order.
AttributeLabels attribute_labels(const dataset::DatasetManifest& manifest, std::span<const std::string> image_ids,
                                 nn::HeadKind kind);

}  // namespace ffsense::train
