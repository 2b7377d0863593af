#include "ffsense/nn/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "ffsense/error.hpp"

namespace ffsense::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using CMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using MapVec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void require_channels(int got, int want, const char* layer) {
  if (got != want)
    throw ShapeError(std::string(layer) + ": expected " + std::to_string(want) + " input channels, got " +
                     std::to_string(got));
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, const ConvGeometry& geometry, Rng& rng)
    : g_(geometry),
      weight_(make_param<T>(name + ".weight", {static_cast<std::size_t>(geometry.out_channels),
                                               static_cast<std::size_t>(geometry.in_channels),
                                               static_cast<std::size_t>(geometry.kernel_h),
                                               static_cast<std::size_t>(geometry.kernel_w)})) {
  const double fan_in = static_cast<double>(g_.in_channels) * g_.kernel_h * g_.kernel_w;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (auto& v : weight_.value) v = static_cast<T>(rng.normal() * stddev);
  if (g_.bias) bias_ = make_param<T>(name + ".bias", {static_cast<std::size_t>(g_.out_channels)});
}

template <typename T>
void Conv2d<T>::im2col(const T* in, int h, int w, T* col) const {
  const int oh = out_h(h), ow = out_w(w);
  std::size_t row = 0;
  for (int c = 0; c < g_.in_channels; ++c) {
    const T* plane = in + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < g_.kernel_h; ++ky) {
      for (int kx = 0; kx < g_.kernel_w; ++kx, ++row) {
        T* dst = col + row * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g_.stride - g_.pad_h + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst + oy * ow, dst + (oy + 1) * ow, T(0));
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g_.stride - g_.pad_w + kx;
            dst[oy * ow + ox] = (ix >= 0 && ix < w) ? plane[iy * w + ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void Conv2d<T>::col2im(const T* col, int h, int w, T* in) const {
  const int oh = out_h(h), ow = out_w(w);
  std::size_t row = 0;
  for (int c = 0; c < g_.in_channels; ++c) {
    T* plane = in + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < g_.kernel_h; ++ky) {
      for (int kx = 0; kx < g_.kernel_w; ++kx, ++row) {
        const T* src = col + row * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g_.stride - g_.pad_h + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g_.stride - g_.pad_w + kx;
            if (ix >= 0 && ix < w) plane[iy * w + ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  require_channels(x.c, g_.in_channels, "conv2d");
  const int oh = out_h(x.h), ow = out_w(x.w);
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: input " + x.shape_string() + " too small for kernel");
  Tensor<T> y(x.n, g_.out_channels, oh, ow);
  const int k = g_.in_channels * g_.kernel_h * g_.kernel_w;
  const int p = oh * ow;
  CMapMat<T> wmat(weight_.value.data(), g_.out_channels, k);
  Buffer<T> col;
  if (!pointwise()) col.resize(static_cast<std::size_t>(k) * p);
  for (int i = 0; i < x.n; ++i) {
    MapMat<T> out(y.sample(i), g_.out_channels, p);
    if (pointwise()) {
      out.noalias() = wmat * CMapMat<T>(x.sample(i), k, p);
    } else {
      im2col(x.sample(i), x.h, x.w, col.data());
      out.noalias() = wmat * CMapMat<T>(col.data(), k, p);
    }
    if (g_.bias) out.colwise() += CMapVec<T>(bias_.value.data(), g_.out_channels);
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::forward_train(const Tensor<T>& x) {
  input_ = x;
  return forward(x);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad) {
  const auto& x = input_;
  const int oh = out_h(x.h), ow = out_w(x.w);
  const int k = g_.in_channels * g_.kernel_h * g_.kernel_w;
  const int p = oh * ow;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  CMapMat<T> wmat(weight_.value.data(), g_.out_channels, k);
  MapMat<T> dw(weight_.grad.data(), g_.out_channels, k);
  Buffer<T> col, dcol;
  if (!pointwise()) {
    col.resize(static_cast<std::size_t>(k) * p);
    dcol.resize(col.size());
  }
  for (int i = 0; i < x.n; ++i) {
    CMapMat<T> dy(grad.sample(i), g_.out_channels, p);
    if (g_.bias) MapVec<T>(bias_.grad.data(), g_.out_channels) += dy.rowwise().sum();
    if (pointwise()) {
      dw.noalias() += dy * CMapMat<T>(x.sample(i), k, p).transpose();
      MapMat<T>(dx.sample(i), k, p).noalias() = wmat.transpose() * dy;
    } else {
      im2col(x.sample(i), x.h, x.w, col.data());
      dw.noalias() += dy * CMapMat<T>(col.data(), k, p).transpose();
      MapMat<T>(dcol.data(), k, p).noalias() = wmat.transpose() * dy;
      col2im(dcol.data(), x.h, x.w, dx.sample(i));
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  if (g_.bias) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, bool zero_gamma)
    : channels_(channels),
      gamma_(make_param<T>(name + ".gamma", {static_cast<std::size_t>(channels)})),
      beta_(make_param<T>(name + ".beta", {static_cast<std::size_t>(channels)})),
      running_mean_(make_param<T>(name + ".running_mean", {static_cast<std::size_t>(channels)}, false)),
      running_var_(make_param<T>(name + ".running_var", {static_cast<std::size_t>(channels)}, false)) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), zero_gamma ? T(0) : T(1));
  std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) const {
  require_channels(x.c, channels_, "batchnorm");
  Tensor<T> y = x;
  const auto plane = x.plane();
  for (int c = 0; c < channels_; ++c) {
    const T scale = gamma_.value[c] / static_cast<T>(std::sqrt(static_cast<double>(running_var_.value[c]) + kEps));
    const T shift = beta_.value[c] - running_mean_.value[c] * scale;
    for (int i = 0; i < x.n; ++i) {
      T* p = y.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] = p[j] * scale + shift;
    }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward_train(const Tensor<T>& x) {
  require_channels(x.c, channels_, "batchnorm");
  const auto plane = x.plane();
  const double m = static_cast<double>(x.n) * static_cast<double>(plane);
  Tensor<T> y(x.n, x.c, x.h, x.w);
  xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
  inv_std_.assign(channels_, T(0));
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
    }
    const double mean = sum / m;
    double sq = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const double d = p[j] - mean;
        sq += d * d;
      }
    }
    const double var = sq / m;
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[c] = static_cast<T>(inv);
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      T* xh = xhat_.sample(i) + c * plane;
      T* out = y.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        xh[j] = static_cast<T>((p[j] - mean) * inv);
        out[j] = gamma_.value[c] * xh[j] + beta_.value[c];
      }
    }
    const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
    running_mean_.value[c] = static_cast<T>((1.0 - kMomentum) * running_mean_.value[c] + kMomentum * mean);
    running_var_.value[c] = static_cast<T>((1.0 - kMomentum) * running_var_.value[c] + kMomentum * unbiased);
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad) {
  const auto plane = grad.plane();
  const double m = static_cast<double>(grad.n) * static_cast<double>(plane);
  Tensor<T> dx(grad.n, grad.c, grad.h, grad.w);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < grad.n; ++i) {
      const T* dy = grad.sample(i) + c * plane;
      const T* xh = xhat_.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        sum_dy += dy[j];
        sum_dy_xhat += static_cast<double>(dy[j]) * xh[j];
      }
    }
    gamma_.grad[c] += static_cast<T>(sum_dy_xhat);
    beta_.grad[c] += static_cast<T>(sum_dy);
    const double g = gamma_.value[c];
    const double k = g * inv_std_[c] / m;
    for (int i = 0; i < grad.n; ++i) {
      const T* dy = grad.sample(i) + c * plane;
      const T* xh = xhat_.sample(i) + c * plane;
      T* out = dx.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j)
        out[j] = static_cast<T>(k * (m * dy[j] - sum_dy - xh[j] * sum_dy_xhat));
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(std::vector<Param<T>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x) const {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::forward_train(const Tensor<T>& x) {
  output_ = forward(x);
  return output_;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad) {
  Tensor<T> dx = grad;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (!(output_.data[i] > T(0))) dx.data[i] = T(0);
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

template <typename T>
Tensor<T> MaxPool2d<T>::run(const Tensor<T>& x, std::vector<std::size_t>* argmax) const {
  constexpr int k = 3, s = 2, pad = 1;
  const int oh = (x.h + 2 * pad - k) / s + 1;
  const int ow = (x.w + 2 * pad - k) / s + 1;
  Tensor<T> y(x.n, x.c, oh, ow);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(i) * x.c + c) * x.plane();
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_idx = base;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * s - pad + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * s - pad + kx;
              if (ix < 0 || ix >= x.w) continue;
              const std::size_t idx = base + static_cast<std::size_t>(iy) * x.w + ix;
              if (x.data[idx] > best) {
                best = x.data[idx];
                best_idx = idx;
              }
            }
          }
          y.data[o] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x) const {
  return run(x, nullptr);
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward_train(const Tensor<T>& x) {
  in_n_ = x.n;
  in_c_ = x.c;
  in_h_ = x.h;
  in_w_ = x.w;
  return run(x, &argmax_);
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad) {
  Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
  for (std::size_t o = 0; o < grad.size(); ++o) dx.data[argmax_[o]] += grad.data[o];
  return dx;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x) const {
  Tensor<T> y(x.n, x.c, 1, 1);
  const auto plane = x.plane();
  for (int i = 0; i < x.n; ++i)
    for (int c = 0; c < x.c; ++c) {
      const T* p = x.sample(i) + c * plane;
      double sum = 0.0;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      y.sample(i)[c] = static_cast<T>(sum / static_cast<double>(plane));
    }
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward_train(const Tensor<T>& x) {
  h_ = x.h;
  w_ = x.w;
  return forward(x);
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad) {
  Tensor<T> dx(grad.n, grad.c, h_, w_);
  const auto plane = dx.plane();
  const T scale = T(1) / static_cast<T>(plane);
  for (int i = 0; i < grad.n; ++i)
    for (int c = 0; c < grad.c; ++c) {
      const T g = grad.sample(i)[c] * scale;
      T* p = dx.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] = g;
    }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(const std::string& name, int in_features, int out_features, Rng& rng, LinearInit init)
    : in_(in_features),
      out_(out_features),
      weight_(make_param<T>(name + ".weight",
                            {static_cast<std::size_t>(out_features), static_cast<std::size_t>(in_features)})),
      bias_(make_param<T>(name + ".bias", {static_cast<std::size_t>(out_features)})) {
  const double stddev = init == LinearInit::he ? std::sqrt(2.0 / in_features) : 0.01;
  for (auto& v : weight_.value) v = static_cast<T>(rng.normal() * stddev);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  if (static_cast<int>(x.sample_size()) != in_)
    throw ShapeError("linear: expected " + std::to_string(in_) + " input features, got " +
                     std::to_string(x.sample_size()));
  Tensor<T> y(x.n, out_, 1, 1);
  CMapMat<T> wmat(weight_.value.data(), out_, in_);
  CMapVec<T> b(bias_.value.data(), out_);
  for (int i = 0; i < x.n; ++i) {
    MapVec<T> out(y.sample(i), out_);
    out.noalias() = wmat * CMapVec<T>(x.sample(i), in_);
    out += b;
  }
  return y;
}

template <typename T>
Tensor<T> Linear<T>::forward_train(const Tensor<T>& x) {
  input_ = x;
  return forward(x);
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad) {
  const int n = grad.n;
  CMapMat<T> dy(grad.data.data(), n, out_);
  CMapMat<T> x(input_.data.data(), n, in_);
  MapMat<T>(weight_.grad.data(), out_, in_).noalias() += dy.transpose() * x;
  MapVec<T>(bias_.grad.data(), out_) += dy.colwise().sum().transpose();
  Tensor<T> dx(input_.n, input_.c, input_.h, input_.w);
  MapMat<T>(dx.data.data(), n, in_).noalias() = dy * CMapMat<T>(weight_.value.data(), out_, in_);
  return dx;
}

template <typename T>
void Linear<T>::collect(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// Sequential

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) const {
  Tensor<T> cur = x;
  for (const auto& l : layers_) cur = l->forward(cur);
  return cur;
}

template <typename T>
Tensor<T> Sequential<T>::forward_train(const Tensor<T>& x) {
  Tensor<T> cur = x;
  for (auto& l : layers_) cur = l->forward_train(cur);
  return cur;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad) {
  Tensor<T> cur = grad;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

template <typename T>
void Sequential<T>::collect(std::vector<Param<T>*>& out) {
  for (auto& l : layers_) l->collect(out);
}

#define FFSENSE_INSTANTIATE(T)     \
  template class Conv2d<T>;        \
  template class BatchNorm2d<T>;   \
  template class ReLU<T>;          \
  template class MaxPool2d<T>;     \
  template class GlobalAvgPool<T>; \
  template class Linear<T>;        \
  template class Sequential<T>;

FFSENSE_INSTANTIATE(float)
FFSENSE_INSTANTIATE(double)

#undef FFSENSE_INSTANTIATE

}  // namespace ffsense::nn
