#include "ffsense/nn/blocks.hpp"

#include <algorithm>

namespace ffsense::nn {

namespace {

template <typename T>
void conv_bn(Sequential<T>& seq, const std::string& name, ConvGeometry g, bool relu, Rng& rng,
             bool zero_gamma = false) {
  seq.template emplace<Conv2d<T>>(name + ".conv", g, rng);
  seq.template emplace<BatchNorm2d<T>>(name + ".bn", g.out_channels, zero_gamma);
  if (relu) seq.template emplace<ReLU<T>>();
}

template <typename T>
void add_into(Tensor<T>& acc, const Tensor<T>& other) {
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += other.data[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Bottleneck

template <typename T>
Bottleneck<T>::Bottleneck(const std::string& name, int in_channels, int width, int expansion, int stride,
                          bool zero_init_residual, Rng& rng)
    : out_channels_(width * expansion) {
  conv_bn(branch_, name + ".reduce", ConvGeometry{in_channels, width, 1, 1, 1, 0, 0, false}, true, rng);
  conv_bn(branch_, name + ".spatial", ConvGeometry{width, width, 3, 3, stride, 1, 1, false}, true, rng);
  conv_bn(branch_, name + ".expand", ConvGeometry{width, out_channels_, 1, 1, 1, 0, 0, false}, false, rng,
          zero_init_residual);
  if (stride != 1 || in_channels != out_channels_) {
    shortcut_ = std::make_unique<Sequential<T>>();
    conv_bn(*shortcut_, name + ".shortcut", ConvGeometry{in_channels, out_channels_, 1, 1, stride, 0, 0, false},
            false, rng);
  }
}

template <typename T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x) const {
  Tensor<T> y = branch_.forward(x);
  if (shortcut_)
    add_into(y, shortcut_->forward(x));
  else
    add_into(y, x);
  return relu_.forward(y);
}

template <typename T>
Tensor<T> Bottleneck<T>::forward_train(const Tensor<T>& x) {
  Tensor<T> y = branch_.forward_train(x);
  if (shortcut_)
    add_into(y, shortcut_->forward_train(x));
  else
    add_into(y, x);
  return relu_.forward_train(y);
}

template <typename T>
Tensor<T> Bottleneck<T>::backward(const Tensor<T>& grad) {
  Tensor<T> g = relu_.backward(grad);
  Tensor<T> dx = branch_.backward(g);
  if (shortcut_)
    add_into(dx, shortcut_->backward(g));
  else
    add_into(dx, g);
  return dx;
}

template <typename T>
void Bottleneck<T>::collect(std::vector<Param<T>*>& out) {
  branch_.collect(out);
  if (shortcut_) shortcut_->collect(out);
}

// ---------------------------------------------------------------------------
// InceptionResNetB

template <typename T>
InceptionResNetB<T>::InceptionResNetB(const std::string& name, int channels, int branch_width, int kernel,
                                      double scale, Rng& rng)
    : channels_(channels), branch_width_(branch_width), scale_(static_cast<T>(scale)) {
  const int pad = kernel / 2;
  conv_bn(branch0_, name + ".branch0", ConvGeometry{channels, branch_width, 1, 1, 1, 0, 0, false}, true, rng);
  conv_bn(branch1_, name + ".branch1_reduce", ConvGeometry{channels, branch_width, 1, 1, 1, 0, 0, false}, true, rng);
  conv_bn(branch1_, name + ".branch1_row", ConvGeometry{branch_width, branch_width, 1, kernel, 1, 0, pad, false},
          true, rng);
  conv_bn(branch1_, name + ".branch1_col", ConvGeometry{branch_width, branch_width, kernel, 1, 1, pad, 0, false},
          true, rng);
  up_ = std::make_unique<Conv2d<T>>(name + ".up", ConvGeometry{2 * branch_width, channels, 1, 1, 1, 0, 0, true}, rng);
}

namespace {

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
    std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, int first) {
  Tensor<T> a(x.n, first, x.h, x.w), b(x.n, x.c - first, x.h, x.w);
  for (int i = 0; i < x.n; ++i) {
    std::copy(x.sample(i), x.sample(i) + a.sample_size(), a.sample(i));
    std::copy(x.sample(i) + a.sample_size(), x.sample(i) + x.sample_size(), b.sample(i));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

template <typename T>
Tensor<T> InceptionResNetB<T>::forward(const Tensor<T>& x) const {
  Tensor<T> up = up_->forward(concat_channels(branch0_.forward(x), branch1_.forward(x)));
  Tensor<T> y = x;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += scale_ * up.data[i];
  return relu_.forward(y);
}

template <typename T>
Tensor<T> InceptionResNetB<T>::forward_train(const Tensor<T>& x) {
  Tensor<T> up = up_->forward_train(concat_channels(branch0_.forward_train(x), branch1_.forward_train(x)));
  Tensor<T> y = x;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += scale_ * up.data[i];
  return relu_.forward_train(y);
}

template <typename T>
Tensor<T> InceptionResNetB<T>::backward(const Tensor<T>& grad) {
  Tensor<T> g = relu_.backward(grad);
  Tensor<T> gup = g;
  for (auto& v : gup.data) v *= scale_;
  auto [g0, g1] = split_channels(up_->backward(gup), branch_width_);
  Tensor<T> dx = g;
  add_into(dx, branch0_.backward(g0));
  add_into(dx, branch1_.backward(g1));
  return dx;
}

template <typename T>
void InceptionResNetB<T>::collect(std::vector<Param<T>*>& out) {
  branch0_.collect(out);
  branch1_.collect(out);
  up_->collect(out);
}

template class Bottleneck<float>;
template class Bottleneck<double>;
template class InceptionResNetB<float>;
template class InceptionResNetB<double>;

}  // namespace ffsense::nn
