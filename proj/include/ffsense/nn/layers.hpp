#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ffsense/nn/tensor.hpp"
#include "ffsense/random.hpp"

namespace ffsense::nn {

// forward() is the pure inference path and may be called concurrently.
// forward_train() caches what backward() needs and updates running statistics;
// backward() accumulates parameter gradients and returns the input gradient.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) const = 0;
  virtual Tensor<T> forward_train(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad) = 0;
  virtual void collect(std::vector<Param<T>*>& /*out*/) {}
};

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad_h = 0;
  int pad_w = 0;
  bool bias = false;
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(const std::string& name, const ConvGeometry& geometry, Rng& rng);
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

  const ConvGeometry& geometry() const { return g_; }
  Param<T>& weight() { return weight_; }

 private:
  int out_h(int h) const { return (h + 2 * g_.pad_h - g_.kernel_h) / g_.stride + 1; }
  int out_w(int w) const { return (w + 2 * g_.pad_w - g_.kernel_w) / g_.stride + 1; }
  bool pointwise() const {
    return g_.kernel_h == 1 && g_.kernel_w == 1 && g_.stride == 1 && g_.pad_h == 0 && g_.pad_w == 0;
  }
  void im2col(const T* in, int h, int w, T* col) const;
  void col2im(const T* col, int h, int w, T* in) const;

  ConvGeometry g_;
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  BatchNorm2d(const std::string& name, int channels, bool zero_gamma = false);
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

 private:
  int channels_;
  Param<T> gamma_, beta_, running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Tensor<T> output_;
};

// 3x3, stride 2, padding 1.
template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Tensor<T> run(const Tensor<T>& x, std::vector<std::size_t>* argmax) const;
  std::vector<std::size_t> argmax_;
  int in_c_ = 0, in_h_ = 0, in_w_ = 0, in_n_ = 0;
};

template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  int h_ = 0, w_ = 0;
};

enum class LinearInit { he, small_normal };

// Applied per sample so inference results do not depend on batch composition.
template <typename T>
class Linear final : public Layer<T> {
 public:
  Linear(const std::string& name, int in_features, int out_features, Rng& rng, LinearInit init = LinearInit::he);
  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    auto& ref = *p;
    layers_.push_back(std::move(p));
    return ref;
  }
  bool empty() const { return layers_.empty(); }

  Tensor<T> forward(const Tensor<T>& x) const override;
  Tensor<T> forward_train(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Param<T>*>& out) override;

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace ffsense::nn
