#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ffsense/nn/loss.hpp"
#include "ffsense/nn/model.hpp"
#include "ffsense/random.hpp"

// Small networks that keep tests fast while exercising every layer kind.
inline ffsense::nn::NetworkSpec tiny_spec(int classes, int input_size = 8, int feature_dim = 6,
                                          std::vector<int> hidden = {5}) {
  using namespace ffsense::nn;
  ExtractorSpec e;
  e.input_size = input_size;
  e.backbone.stem_channels = 4;
  e.backbone.stem_kernel = 3;
  e.backbone.stem_stride = 1;
  e.backbone.stem_pool = false;
  e.backbone.stage_blocks = {1, 1};
  e.backbone.base_width = 2;
  e.backbone.expansion = 2;
  e.backbone.zero_init_residual = false;
  e.bridge = {1, 2, 3, 0.1};
  NetworkSpec spec;
  spec.extractor = e;
  spec.feature_dim = feature_dim;
  spec.head = {HeadKind::identity_softmax, classes, std::move(hidden)};
  spec.validate();
  return spec;
}

template <typename T>
ffsense::nn::Tensor<T> random_batch(ffsense::Rng& rng, int n, int size, int channels = 3) {
  ffsense::nn::Tensor<T> t(n, channels, size, size);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform());
  return t;
}

struct GradCheck {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t failures = 0;  // entries with relative error >= tolerance
};

// Central differences on `samples` randomly chosen trainable weights of a
// double-precision tiny network under softmax cross-entropy.
inline GradCheck gradient_check(std::size_t samples, double tolerance = 1e-3, std::uint64_t seed = 1) {
  using namespace ffsense::nn;
  ffsense::Rng rng(seed);
  Model<double> model(tiny_spec(3), seed);
  const auto input = random_batch<double>(rng, 4, 8);
  const std::vector<int> targets{0, 2, 1, 2};

  auto loss_at = [&] {
    Tensor<double> grad;
    return cross_entropy(model.forward_train(input), targets, {}, grad).value;
  };
  model.zero_grad();
  Tensor<double> grad;
  cross_entropy(model.forward_train(input), targets, {}, grad);
  model.backward(grad);

  auto params = model.trainable_parameters();
  std::size_t total = 0;
  for (auto* p : params) total += p->numel();

  GradCheck out;
  const double h = 1e-6;
  while (out.checked < samples) {
    auto flat = rng.below(total);
    Param<double>* p = nullptr;
    for (auto* q : params) {
      if (flat < q->numel()) {
        p = q;
        break;
      }
      flat -= q->numel();
    }
    const double analytic = p->grad[flat];
    const double orig = p->value[flat];
    p->value[flat] = orig + h;
    const double up = loss_at();
    p->value[flat] = orig - h;
    const double down = loss_at();
    p->value[flat] = orig;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max(std::fabs(analytic) + std::fabs(numeric), 1e-7);
    const double rel = std::fabs(analytic - numeric) / denom;
    out.max_rel_error = std::max(out.max_rel_error, rel);
    if (rel >= tolerance) ++out.failures;
    ++out.checked;
  }
  return out;
}
