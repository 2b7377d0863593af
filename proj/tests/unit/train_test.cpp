#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ffsense/dataset/split.hpp"
#include "ffsense/error.hpp"
#include "ffsense/train/config.hpp"
#include "ffsense/train/trainer.hpp"
#include "fixtures.hpp"
#include "temp_dir.hpp"
#include "tiny.hpp"

using namespace ffsense;
using namespace ffsense::train;

namespace {

const char* kMinimalConfig =
    "epochs = 3\n"
    "batch_size = 4\n"
    "learning_rate = 0.01\n"
    "optimizer = sgd_momentum\n"
    "seed = 5\n";

// Two well separated clusters per class in a 4-d feature space.
LabeledFeatures separable_features(Rng& rng, int n, bool ages) {
  LabeledFeatures out;
  std::vector<double> age_labels;
  std::vector<std::string> class_labels;
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    nn::FeatureVector f;
    for (int k = 0; k < 4; ++k) f.values.push_back(static_cast<float>((k == cls ? 3.0 : 0.0) + 0.1 * rng.normal()));
    out.features.push_back(f);
    age_labels.push_back(cls ? 60.0 : 20.0);
    class_labels.emplace_back(cls ? "female" : "male");
  }
  if (ages)
    out.labels = age_labels;
  else
    out.labels = class_labels;
  return out;
}

}  // namespace

TEST(Config, ParsesRequiredKeysAndDefaults) {
  auto cfg = parse_pipeline_config(kMinimalConfig);
  EXPECT_EQ(cfg.identity.epochs, 3);
  EXPECT_EQ(cfg.identity.optimizer, OptimizerKind::sgd_momentum);
  EXPECT_TRUE(cfg.identity.freeze_extractor);
  EXPECT_EQ(cfg.head.epochs, 3);
  EXPECT_EQ(cfg.extractor.input_size, 256);
  EXPECT_EQ(cfg.feature_dim, 2048);
  EXPECT_EQ(cfg.config_hash.size(), 64u);
  EXPECT_EQ(parse_pipeline_config(std::string("# comment\n") + kMinimalConfig).config_hash, cfg.config_hash);
}

TEST(Config, MissingKeyIsNamed) {
  for (const auto& key : required_config_keys()) {
    std::string text;
    std::istringstream in(kMinimalConfig);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind(key + " ", 0) != 0) text += line + "\n";
    try {
      parse_pipeline_config(text);
      FAIL() << key;
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find("'" + key + "'"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, RejectsBadValuesAndUnknownKeys) {
  EXPECT_THROW(parse_pipeline_config(std::string(kMinimalConfig) + "mystery = 1\n"), DomainError);
  EXPECT_THROW(parse_pipeline_config(std::string(kMinimalConfig) + "epochs = 4\n"), ParseError);
  std::string zero = kMinimalConfig;
  zero.replace(zero.find("epochs = 3"), 10, "epochs = 0");
  EXPECT_THROW(parse_pipeline_config(zero), DomainError);
  EXPECT_THROW(parse_pipeline_config(std::string(kMinimalConfig) + "age_loss = huber\n"), DomainError);
  EXPECT_THROW(parse_pipeline_config("epochs 3\n"), ParseError);
}

TEST(Optimizer, AdamAndMomentumDescendAQuadratic) {
  for (auto kind : {OptimizerKind::adaptive_moment, OptimizerKind::sgd_momentum}) {
    auto p = nn::make_param<float>("w", {2});
    p.value = {3.0f, -2.0f};
    Optimizer opt(kind, kind == OptimizerKind::adaptive_moment ? 0.1 : 0.05);
    std::vector<nn::Param<float>*> params{&p};
    for (int i = 0; i < 300; ++i) {
      for (int k = 0; k < 2; ++k) p.grad[k] = 2 * p.value[k];
      opt.step(params);
    }
    EXPECT_NEAR(p.value[0], 0.0, 0.05);
    EXPECT_NEAR(p.value[1], 0.0, 0.05);
  }
}

TEST(Optimizer, FirstAdamStepHasLearningRateMagnitude) {
  auto p = nn::make_param<float>("w", {1});
  p.value = {1.0f};
  p.grad = {123.0f};
  Optimizer opt(OptimizerKind::adaptive_moment, 0.01);
  std::vector<nn::Param<float>*> params{&p};
  opt.step(params);
  EXPECT_NEAR(p.value[0], 0.99f, 1e-5);
}

TEST(EpochOrder, IsADeterministicPermutation) {
  auto a = epoch_order(50, 3, 0), b = epoch_order(50, 3, 0), c = epoch_order(50, 3, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::set<std::size_t> s(a.begin(), a.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_EQ(*s.rbegin(), 49u);
}

TEST(AttributeHead, LearnsSeparableClasses) {
  Rng rng(1);
  auto train = separable_features(rng, 40, false), test = separable_features(rng, 10, false);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  auto r = train_attribute_head(train, nn::HeadKind::gender_softmax, cfg, {8}, &test);
  EXPECT_EQ(r.report.epochs.size(), 30u);
  EXPECT_DOUBLE_EQ(r.report.final_train_metric, 1.0);
  EXPECT_DOUBLE_EQ(*r.report.final_test_metric, 1.0);
  EXPECT_EQ(r.checkpoint.spec.head.kind, nn::HeadKind::gender_softmax);
}

TEST(AttributeHead, AgeRegressionReducesError) {
  Rng rng(2);
  auto train = separable_features(rng, 40, true);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.02;
  cfg.loss = nn::LossKind::mse;
  auto r = train_attribute_head(train, nn::HeadKind::age_regression, cfg, {16});
  EXPECT_LT(r.report.final_train_metric, 3.0);
  EXPECT_LT(r.report.final_train_metric, r.report.epochs.front().train_metric);
}

TEST(AttributeHead, LabelDomainErrors) {
  Rng rng(3);
  auto data = separable_features(rng, 8, false);
  TrainConfig cfg;
  cfg.epochs = 1;
  data.labels = std::vector<std::string>(8, "robot");
  EXPECT_THROW(train_attribute_head(data, nn::HeadKind::gender_softmax, cfg), DomainError);
  data.labels = std::vector<double>(8, -4.0);
  cfg.loss = nn::LossKind::mse;
  EXPECT_THROW(train_attribute_head(data, nn::HeadKind::age_regression, cfg), DomainError);
  cfg.loss = nn::LossKind::cross_entropy;
  data.labels = std::vector<double>(8, 30.0);
  EXPECT_THROW(train_attribute_head(data, nn::HeadKind::age_regression, cfg), DomainError);
  data.labels = std::vector<std::string>(7, "male");
  EXPECT_THROW(train_attribute_head(data, nn::HeadKind::gender_softmax, cfg), DomainError);
}

class SyntheticData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    fixtures::write_synthetic_dataset(dir_->path());
  }
  static void TearDownTestSuite() { delete dir_; }

  static dataset::DatasetManifest manifest() { return dataset::load_manifest(dir_->path() / "manifest.jsonl"); }
  static PipelineConfig config(int epochs) { return parse_pipeline_config(fixtures::synthetic_config(11, epochs)); }

  static TempDir* dir_;
};
TempDir* SyntheticData::dir_ = nullptr;

TEST_F(SyntheticData, IdentityTrainingIsDeterministic) {
  const auto m = manifest();
  const auto split = dataset::split_train_test(m, {0.75, 1, true});
  const auto cfg = config(3);
  const auto spec = cfg.identity_spec(static_cast<int>(m.num_identities()));
  auto a = train_identity(m, split, spec, cfg.identity);
  auto b = train_identity(m, split, spec, cfg.identity);
  EXPECT_EQ(a.checkpoint.weights, b.checkpoint.weights);
  ASSERT_EQ(a.report.epochs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.report.epochs[i].loss, b.report.epochs[i].loss);
    EXPECT_TRUE(a.report.epochs[i].test_metric.has_value());
  }
}

TEST_F(SyntheticData, IdentityPreconditions) {
  const auto m = manifest();
  const auto cfg = config(1);
  dataset::TrainTestSplit empty;
  EXPECT_THROW(train_identity(m, empty, cfg.identity_spec(8), cfg.identity), DomainError);
  const auto split = dataset::split_train_test(m, {});
  EXPECT_THROW(train_identity(m, split, cfg.identity_spec(9), cfg.identity), DomainError);
  auto bad = cfg.identity;
  bad.epochs = 0;
  EXPECT_THROW(train_identity(m, split, cfg.identity_spec(8), bad), DomainError);
}

TEST_F(SyntheticData, FeatureCacheHitsOnSecondCall) {
  const auto m = manifest();
  nn::Model<float> model(tiny_spec(8, 16), 1);
  auto ckpt = nn::make_checkpoint(model);
  std::vector<std::string> ids;
  for (const auto& im : m.images()) ids.push_back(im.image_id);
  TempDir cache;
  CacheStats first, second;
  auto a = precompute_features(ckpt, m, ids, cache.path(), &first);
  auto b = precompute_features(ckpt, m, ids, cache.path(), &second);
  EXPECT_EQ(first.computed, ids.size());
  EXPECT_EQ(second.hits, ids.size());
  EXPECT_EQ(second.computed, 0u);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.at(ids[3]), b.features[3]);
  EXPECT_THROW(a.at("nope"), DomainError);
}

TEST_F(SyntheticData, FrozenFineTuneKeepsExtractorBitwise) {
  const auto m = manifest();
  const auto split = dataset::split_train_test(m, {});
  auto cfg = config(1);
  const auto identity = train_identity(m, split, cfg.identity_spec(8), cfg.identity);
  auto head_cfg = cfg.head;
  head_cfg.epochs = 2;
  head_cfg.freeze_extractor = true;
  auto tuned = fine_tune_attribute(identity.checkpoint, m, split, nn::HeadKind::gender_softmax, head_cfg, {8});
  for (const auto& [name, rec] : identity.checkpoint.weights) {
    if (name.rfind("head.", 0) == 0) continue;
    ASSERT_EQ(tuned.checkpoint.weights.at(name), rec) << name;
  }
  head_cfg.freeze_extractor = false;
  auto unfrozen = fine_tune_attribute(identity.checkpoint, m, split, nn::HeadKind::gender_softmax, head_cfg, {8});
  bool changed = false;
  for (const auto& [name, rec] : identity.checkpoint.weights)
    if (name.rfind("head.", 0) != 0 && unfrozen.checkpoint.weights.at(name) != rec) changed = true;
  EXPECT_TRUE(changed);
}

TEST_F(SyntheticData, MissingImagePayloadIsReported) {
  auto m = manifest();
  std::filesystem::remove(m.resolve(m.images()[2]));
  ImageInputs inputs(m, 16);
  try {
    inputs.get(m.images()[2].image_id);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(m.images()[2].image_id), std::string::npos);
  }
  fixtures::write_synthetic_dataset(dir_->path());
}
