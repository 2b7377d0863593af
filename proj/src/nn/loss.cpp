#include "ffsense/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "ffsense/error.hpp"

namespace ffsense::nn {

template <typename T>
std::vector<double> softmax(std::span<const T> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

template <typename T>
LossResult cross_entropy(const Tensor<T>& logits, std::span<const int> targets, std::span<const double> class_weights,
                         Tensor<T>& grad) {
  const int n = logits.n;
  const int c = static_cast<int>(logits.sample_size());
  if (static_cast<int>(targets.size()) != n) throw ShapeError("cross_entropy: target count mismatch");
  grad = Tensor<T>(logits.n, logits.c, logits.h, logits.w);
  double total = 0.0;
  double weight_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t < 0 || t >= c) throw DomainError("cross_entropy: target " + std::to_string(t) + " out of range");
    const double w = class_weights.empty() ? 1.0 : class_weights[t];
    weight_sum += w;
    auto p = softmax(logits.sample_span(i));
    total += -w * std::log(std::max(p[t], 1e-300));
    T* g = grad.sample(i);
    for (int k = 0; k < c; ++k) g[k] = static_cast<T>(w * (p[k] - (k == t ? 1.0 : 0.0)));
  }
  const double norm = weight_sum > 0.0 ? weight_sum : 1.0;
  for (auto& v : grad.data) v = static_cast<T>(v / norm);
  return {total / norm};
}

template <typename T>
LossResult regression_loss(LossKind kind, const Tensor<T>& outputs, std::span<const double> targets, Tensor<T>& grad) {
  const int n = outputs.n;
  if (outputs.sample_size() != 1) throw ShapeError("regression loss expects a single output column");
  if (static_cast<int>(targets.size()) != n) throw ShapeError("regression loss: target count mismatch");
  grad = Tensor<T>(outputs.n, outputs.c, outputs.h, outputs.w);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = static_cast<double>(outputs.data[i]) - targets[i];
    if (kind == LossKind::mae) {
      total += std::abs(d);
      grad.data[i] = static_cast<T>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n);
    } else {
      total += d * d;
      grad.data[i] = static_cast<T>(2.0 * d / n);
    }
  }
  return {total / n};
}

template std::vector<double> softmax<float>(std::span<const float>);
template std::vector<double> softmax<double>(std::span<const double>);
template LossResult cross_entropy<float>(const Tensor<float>&, std::span<const int>, std::span<const double>,
                                         Tensor<float>&);
template LossResult cross_entropy<double>(const Tensor<double>&, std::span<const int>, std::span<const double>,
                                          Tensor<double>&);
template LossResult regression_loss<float>(LossKind, const Tensor<float>&, std::span<const double>, Tensor<float>&);
template LossResult regression_loss<double>(LossKind, const Tensor<double>&, std::span<const double>,
                                            Tensor<double>&);

}  // namespace ffsense::nn
