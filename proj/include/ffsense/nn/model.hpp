#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ffsense/nn/layers.hpp"
#include "ffsense/nn/network_spec.hpp"

namespace ffsense::nn {

struct TensorRecord {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  bool operator==(const TensorRecord&) const = default;
};
using TensorStore = std::map<std::string, TensorRecord>;

// Executable network built from a NetworkSpec. Inputs are NCHW image batches
// when the spec has an extractor, otherwise N x feature_dim feature batches.
// Outputs are raw head values (logits, or the age estimate).
template <typename T>
class Model {
 public:
  Model(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  bool has_extractor() const { return static_cast<bool>(extractor_); }

  Tensor<T> features(const Tensor<T>& input) const;
  Tensor<T> head_outputs(const Tensor<T>& features) const;
  Tensor<T> outputs(const Tensor<T>& input) const { return head_outputs(features(input)); }

  // With a frozen extractor the extractor runs in inference mode and receives
  // no gradient; its weights and running statistics stay untouched.
  Tensor<T> forward_train(const Tensor<T>& input);
  void backward(const Tensor<T>& output_grad);

  void set_extractor_frozen(bool frozen) { extractor_frozen_ = frozen; }
  bool extractor_frozen() const { return extractor_frozen_; }

  std::vector<Param<T>*> parameters();
  std::vector<Param<T>*> extractor_parameters();
  std::vector<Param<T>*> head_parameters();
  std::vector<Param<T>*> trainable_parameters();
  void zero_grad();

  TensorStore export_weights();
  // Throws ShapeError naming the first missing or mis-shaped tensor.
  void import_weights(const TensorStore& store);
  // Copies every tensor whose name starts with prefix and exists in both.
  std::size_t import_matching(const TensorStore& store, const std::string& prefix);

 private:
  NetworkSpec spec_;
  std::unique_ptr<Sequential<T>> extractor_;
  Sequential<T> head_;
  bool extractor_frozen_ = false;
};

}  // namespace ffsense::nn
