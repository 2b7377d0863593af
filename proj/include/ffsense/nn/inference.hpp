#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ffsense/dataset/image.hpp"
#include "ffsense/nn/checkpoint.hpp"
#include "ffsense/nn/model.hpp"

namespace ffsense::nn {

// Probability vector over enrolled identities.
struct IdentityDistribution {
  std::vector<double> probs;
  std::size_t predicted() const;  // argmax, lowest index on ties
};

struct FeatureVector {
  std::vector<float> values;
  bool operator==(const FeatureVector&) const = default;
};

inline constexpr double kMaxAge = 120.0;

struct AttributePrediction {
  double age = 0.0;                         // clamped to [0, 120]
  std::array<double, 2> gender_probs{};     // male, female
  std::array<double, 4> ethnicity_probs{};  // east_asian, west_asian, black, white
};

// Identity network ready for inference. Methods are const and thread-safe.
class Recognizer {
 public:
  explicit Recognizer(const Checkpoint& checkpoint);

  const NetworkSpec& spec() const { return model_.spec(); }
  int input_size() const { return spec().extractor->input_size; }

  // Images are resized to the network input; results are independent of batching.
  std::vector<IdentityDistribution> predict_identity(std::span<const dataset::Image> images) const;
  std::vector<FeatureVector> extract_features(std::span<const dataset::Image> images) const;
  IdentityDistribution predict_identity(const dataset::Image& image) const;
  FeatureVector extract_features(const dataset::Image& image) const;

  // Lower-level entry for already preprocessed CHW inputs.
  std::vector<IdentityDistribution> predict_identity(const Tensor<float>& batch) const;

 private:
  Tensor<float> prepare(std::span<const dataset::Image> images) const;
  Model<float> model_;
};

struct HeadCheckpoints {
  Checkpoint age;
  Checkpoint gender;
  Checkpoint ethnicity;
};

// The three attribute heads. A head carrying its own (fine-tuned) extractor
// uses it; otherwise it consumes the shared identity features.
class AttributePredictor {
 public:
  AttributePredictor(const Checkpoint& extractor, const HeadCheckpoints& heads);

  AttributePrediction predict(const dataset::Image& image) const;
  AttributePrediction predict_from_features(const FeatureVector& features, const dataset::Image* image = nullptr) const;

 private:
  Recognizer extractor_;
  Model<float> age_, gender_, ethnicity_;
};

IdentityDistribution predict_identity(const Checkpoint& checkpoint, const dataset::Image& image);
FeatureVector extract_features(const Checkpoint& checkpoint, const dataset::Image& image);
AttributePrediction predict_attributes(const Checkpoint& extractor, const HeadCheckpoints& heads,
                                       const dataset::Image& image);

}  // namespace ffsense::nn
