#include "ffsense/nn/model.hpp"

#include <algorithm>

#include "ffsense/error.hpp"
#include "ffsense/nn/blocks.hpp"

namespace ffsense::nn {

template <typename T>
Model<T>::Model(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(seed);
  if (spec_.extractor) {
    const auto& e = *spec_.extractor;
    const auto& b = e.backbone;
    extractor_ = std::make_unique<Sequential<T>>();
    auto& ex = *extractor_;
    ex.template emplace<Conv2d<T>>(
        "backbone.stem.conv",
        ConvGeometry{e.channels, b.stem_channels, b.stem_kernel, b.stem_kernel, b.stem_stride, b.stem_kernel / 2,
                     b.stem_kernel / 2, false},
        rng);
    ex.template emplace<BatchNorm2d<T>>("backbone.stem.bn", b.stem_channels);
    ex.template emplace<ReLU<T>>();
    if (b.stem_pool) ex.template emplace<MaxPool2d<T>>();
    int channels = b.stem_channels;
    for (std::size_t stage = 0; stage < b.stage_blocks.size(); ++stage) {
      const int width = b.base_width << stage;
      for (int block = 0; block < b.stage_blocks[stage]; ++block) {
        const int stride = (stage > 0 && block == 0) ? 2 : 1;
        auto& bn = ex.template emplace<Bottleneck<T>>(
            "backbone.stage" + std::to_string(stage + 1) + ".block" + std::to_string(block), channels, width,
            b.expansion, stride, b.zero_init_residual, rng);
        channels = bn.out_channels();
      }
    }
    for (int i = 0; i < e.bridge.blocks; ++i)
      ex.template emplace<InceptionResNetB<T>>("bridge.block" + std::to_string(i), channels, e.bridge.branch_width,
                                               e.bridge.kernel, e.bridge.scale, rng);
    ex.template emplace<GlobalAvgPool<T>>();
    if (channels != spec_.feature_dim)
      ex.template emplace<Linear<T>>("projection", channels, spec_.feature_dim, rng, LinearInit::he);
  }
  int width = spec_.feature_dim;
  for (std::size_t i = 0; i < spec_.head.hidden.size(); ++i) {
    head_.template emplace<Linear<T>>("head.hidden" + std::to_string(i), width, spec_.head.hidden[i], rng,
                                      LinearInit::he);
    head_.template emplace<ReLU<T>>();
    width = spec_.head.hidden[i];
  }
  head_.template emplace<Linear<T>>("head.output", width, spec_.head.output_width(), rng, LinearInit::small_normal);
}

template <typename T>
Tensor<T> Model<T>::features(const Tensor<T>& input) const {
  if (!extractor_) {
    if (static_cast<int>(input.sample_size()) != spec_.feature_dim)
      throw ShapeError("head expects " + std::to_string(spec_.feature_dim) + "-wide features, got " +
                       std::to_string(input.sample_size()));
    return input;
  }
  const auto& e = *spec_.extractor;
  if (input.c != e.channels || input.h != e.input_size || input.w != e.input_size)
    throw ShapeError("extractor expects Nx" + std::to_string(e.channels) + "x" + std::to_string(e.input_size) + "x" +
                     std::to_string(e.input_size) + " input, got " + input.shape_string());
  return extractor_->forward(input);
}

template <typename T>
Tensor<T> Model<T>::head_outputs(const Tensor<T>& features) const {
  return head_.forward(features);
}

template <typename T>
Tensor<T> Model<T>::forward_train(const Tensor<T>& input) {
  Tensor<T> f = (extractor_ && !extractor_frozen_) ? extractor_->forward_train(input) : features(input);
  return head_.forward_train(f);
}

template <typename T>
void Model<T>::backward(const Tensor<T>& output_grad) {
  Tensor<T> g = head_.backward(output_grad);
  if (extractor_ && !extractor_frozen_) extractor_->backward(g);
}

template <typename T>
std::vector<Param<T>*> Model<T>::extractor_parameters() {
  std::vector<Param<T>*> out;
  if (extractor_) extractor_->collect(out);
  return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::head_parameters() {
  std::vector<Param<T>*> out;
  head_.collect(out);
  return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::parameters() {
  auto out = extractor_parameters();
  auto h = head_parameters();
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::trainable_parameters() {
  std::vector<Param<T>*> out;
  if (!extractor_frozen_)
    for (auto* p : extractor_parameters())
      if (p->trainable) out.push_back(p);
  for (auto* p : head_parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
TensorStore Model<T>::export_weights() {
  TensorStore store;
  for (auto* p : parameters()) {
    TensorRecord rec;
    rec.shape = p->shape;
    rec.values.assign(p->value.begin(), p->value.end());
    store.emplace(p->name, std::move(rec));
  }
  return store;
}

template <typename T>
void Model<T>::import_weights(const TensorStore& store) {
  auto params = parameters();
  for (auto* p : params) {
    auto it = store.find(p->name);
    if (it == store.end()) throw ShapeError("tensor '" + p->name + "' missing from weights");
    if (it->second.shape != p->shape || it->second.values.size() != p->numel())
      throw ShapeError("tensor '" + p->name + "' has a shape incompatible with the network spec");
  }
  if (store.size() != params.size()) {
    for (const auto& [name, rec] : store)
      if (std::none_of(params.begin(), params.end(), [&](auto* p) { return p->name == name; }))
        throw ShapeError("tensor '" + name + "' is not part of the network spec");
  }
  for (auto* p : params) {
    const auto& rec = store.at(p->name);
    std::transform(rec.values.begin(), rec.values.end(), p->value.begin(), [](float v) { return static_cast<T>(v); });
  }
}

template <typename T>
std::size_t Model<T>::import_matching(const TensorStore& store, const std::string& prefix) {
  std::size_t copied = 0;
  for (auto* p : parameters()) {
    if (p->name.rfind(prefix, 0) != 0) continue;
    auto it = store.find(p->name);
    if (it == store.end()) continue;
    if (it->second.shape != p->shape)
      throw ShapeError("pretrained tensor '" + p->name + "' has a shape incompatible with the network spec");
    std::transform(it->second.values.begin(), it->second.values.end(), p->value.begin(),
                   [](float v) { return static_cast<T>(v); });
    ++copied;
  }
  return copied;
}

template class Model<float>;
template class Model<double>;

}  // namespace ffsense::nn
