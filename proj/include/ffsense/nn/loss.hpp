#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ffsense/nn/tensor.hpp"

namespace ffsense::nn {

// Numerically stable softmax, evaluated in double.
template <typename T>
std::vector<double> softmax(std::span<const T> logits);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

enum class LossKind { cross_entropy, mse, mae };

struct LossResult {
  double value = 0.0;  // mean over the batch
};

// Softmax cross-entropy on logits [N x C]; class_weights empty = unweighted.
// Writes dL/dlogits (already divided by N) into grad.
template <typename T>
LossResult cross_entropy(const Tensor<T>& logits, std::span<const int> targets, std::span<const double> class_weights,
                         Tensor<T>& grad);

// Regression losses on a single output column [N x 1].
template <typename T>
LossResult regression_loss(LossKind kind, const Tensor<T>& outputs, std::span<const double> targets,
                           Tensor<T>& grad);

}  // namespace ffsense::nn
