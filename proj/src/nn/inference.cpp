#include "ffsense/nn/inference.hpp"

#include <algorithm>
#include <cmath>

#include "ffsense/error.hpp"
#include "ffsense/nn/loss.hpp"

namespace ffsense::nn {

std::size_t IdentityDistribution::predicted() const { return argmax(probs); }

namespace {

Model<float> identity_model(const Checkpoint& checkpoint) {
  if (!checkpoint.spec.extractor) throw DomainError("checkpoint has no feature extractor");
  return instantiate(checkpoint);
}

Tensor<float> single_input(const Model<float>& model, const dataset::Image& image) {
  const int size = model.spec().extractor->input_size;
  Tensor<float> t(1, 3, size, size);
  auto chw = dataset::to_network_input(image, size);
  std::copy(chw.begin(), chw.end(), t.data.begin());
  return t;
}

}  // namespace

Recognizer::Recognizer(const Checkpoint& checkpoint) : model_(identity_model(checkpoint)) {}

Tensor<float> Recognizer::prepare(std::span<const dataset::Image> images) const {
  const int size = input_size();
  Tensor<float> batch(static_cast<int>(images.size()), 3, size, size);
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto chw = dataset::to_network_input(images[i], size);
    std::copy(chw.begin(), chw.end(), batch.sample(static_cast<int>(i)));
  }
  return batch;
}

std::vector<IdentityDistribution> Recognizer::predict_identity(const Tensor<float>& batch) const {
  if (spec().head.kind != HeadKind::identity_softmax)
    throw DomainError("checkpoint head is " + std::string(to_string(spec().head.kind)) + ", not identity_softmax");
  auto logits = model_.outputs(batch);
  std::vector<IdentityDistribution> out(logits.n);
  for (int i = 0; i < logits.n; ++i) out[i].probs = softmax(logits.sample_span(i));
  return out;
}

std::vector<IdentityDistribution> Recognizer::predict_identity(std::span<const dataset::Image> images) const {
  if (spec().head.kind != HeadKind::identity_softmax)
    throw DomainError("checkpoint head is " + std::string(to_string(spec().head.kind)) + ", not identity_softmax");
  return predict_identity(prepare(images));
}

std::vector<FeatureVector> Recognizer::extract_features(std::span<const dataset::Image> images) const {
  auto f = model_.features(prepare(images));
  std::vector<FeatureVector> out(f.n);
  for (int i = 0; i < f.n; ++i) out[i].values.assign(f.sample(i), f.sample(i) + f.sample_size());
  return out;
}

IdentityDistribution Recognizer::predict_identity(const dataset::Image& image) const {
  return predict_identity(std::span(&image, 1)).front();
}

FeatureVector Recognizer::extract_features(const dataset::Image& image) const {
  return extract_features(std::span(&image, 1)).front();
}

// ---------------------------------------------------------------------------

namespace {

Model<float> head_model(const Checkpoint& c, HeadKind expected, int feature_dim) {
  if (c.spec.head.kind != expected)
    throw DomainError("expected a " + std::string(to_string(expected)) + " head, got " +
                      std::string(to_string(c.spec.head.kind)));
  if (!c.spec.extractor && c.spec.feature_dim != feature_dim)
    throw ShapeError(std::string(to_string(expected)) + " head takes " + std::to_string(c.spec.feature_dim) +
                     "-wide input but the extractor emits " + std::to_string(feature_dim));
  return instantiate(c);
}

Tensor<float> run_head(const Model<float>& head, const FeatureVector& features, const dataset::Image* image) {
  if (head.has_extractor()) {
    if (!image) throw DomainError("fine-tuned head needs the source image");
    return head.outputs(single_input(head, *image));
  }
  Tensor<float> f(1, static_cast<int>(features.values.size()), 1, 1);
  std::copy(features.values.begin(), features.values.end(), f.data.begin());
  return head.head_outputs(f);
}

}  // namespace

AttributePredictor::AttributePredictor(const Checkpoint& extractor, const HeadCheckpoints& heads)
    : extractor_(extractor),
      age_(head_model(heads.age, HeadKind::age_regression, extractor.spec.feature_dim)),
      gender_(head_model(heads.gender, HeadKind::gender_softmax, extractor.spec.feature_dim)),
      ethnicity_(head_model(heads.ethnicity, HeadKind::ethnicity_softmax, extractor.spec.feature_dim)) {}

AttributePrediction AttributePredictor::predict_from_features(const FeatureVector& features,
                                                             const dataset::Image* image) const {
  AttributePrediction out;
  const double age = static_cast<double>(run_head(age_, features, image).data[0]);
  out.age = std::isfinite(age) ? std::clamp(age, 0.0, kMaxAge) : 0.0;
  auto g = softmax(run_head(gender_, features, image).sample_span(0));
  std::copy(g.begin(), g.end(), out.gender_probs.begin());
  auto e = softmax(run_head(ethnicity_, features, image).sample_span(0));
  std::copy(e.begin(), e.end(), out.ethnicity_probs.begin());
  return out;
}

AttributePrediction AttributePredictor::predict(const dataset::Image& image) const {
  return predict_from_features(extractor_.extract_features(image), &image);
}

IdentityDistribution predict_identity(const Checkpoint& checkpoint, const dataset::Image& image) {
  return Recognizer(checkpoint).predict_identity(image);
}

FeatureVector extract_features(const Checkpoint& checkpoint, const dataset::Image& image) {
  return Recognizer(checkpoint).extract_features(image);
}

AttributePrediction predict_attributes(const Checkpoint& extractor, const HeadCheckpoints& heads,
                                       const dataset::Image& image) {
  return AttributePredictor(extractor, heads).predict(image);
}

}  // namespace ffsense::nn
