#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace ffsense::nn {

// Cache-line aligned storage. Eigen picks its vectorized paths from the
// runtime address, so results only repeat bit for bit when every buffer
// starts on the same boundary.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = (n * sizeof(T) + kAlign - 1) / kAlign * kAlign;
    void* p = std::aligned_alloc(kAlign, bytes == 0 ? kAlign : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

// Dense NCHW activation batch. Fully connected activations use h = w = 1.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  Buffer<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t size() const { return data.size(); }

  T* sample(int i) { return data.data() + i * sample_size(); }
  const T* sample(int i) const { return data.data() + i * sample_size(); }
  std::span<const T> sample_span(int i) const { return {sample(i), sample_size()}; }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_string() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

// A named weight or buffer. Buffers (batch-norm running statistics) are saved
// in checkpoints but never touched by the optimizer.
template <typename T>
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  Buffer<T> value;
  Buffer<T> grad;
  bool trainable = true;

  std::size_t numel() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
Param<T> make_param(std::string name, std::vector<std::size_t> shape, bool trainable = true) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  Param<T> p{std::move(name), std::move(shape), Buffer<T>(count, T(0)), {}, trainable};
  if (trainable) p.grad.assign(count, T(0));
  return p;
}

}  // namespace ffsense::nn
