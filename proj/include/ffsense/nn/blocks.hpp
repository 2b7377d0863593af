#pragma once

#include <memory>
#include <string>

#include "ffsense/nn/layers.hpp"

namespace ffsense::nn {

// ResNet bottleneck: 1x1 reduce, 3x3 (carries the stride), 1x1 expand, each
// followed by batch norm; projection shortcut when shape changes.
template <typename T>
class Bottleneck final : public Layer<T> {
 public:
  Bottleneck(const std::string& name, int in_channels, int width, int expansion, int stride,
             bool zero_init_residual, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

  int out_channels() const { return out_channels_; }

 private:
  int out_channels_;
  Sequential<T> branch_;
  std::unique_ptr<Sequential<T>> shortcut_;
  ReLU<T> relu_;
};

// Inception-ResNet-v1 block B: a 1x1 branch and a 1x1 -> 1xk -> kx1 branch,
// concatenated, projected back by a biased 1x1 conv, scaled, added to the
// input and rectified.
template <typename T>
class InceptionResNetB final : public Layer<T> {
 public:
  InceptionResNetB(const std::string& name, int channels, int branch_width, int kernel, double scale, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

 private:
  int channels_, branch_width_;
  T scale_;
  Sequential<T> branch0_, branch1_;
  std::unique_ptr<Conv2d<T>> up_;
  ReLU<T> relu_;
};

}  // namespace ffsense::nn
