#include "ffsense/dataset/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "ffsense/error.hpp"
#include "ffsense/io.hpp"

namespace ffsense::dataset {

namespace {

// Fisher-Yates driven directly by mt19937_64 output, whose sequence is fixed by
// the standard; std::shuffle and the distributions are implementation-defined.
void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::size_t train_count(double fraction, std::size_t n) {
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

TrainTestSplit split_train_test(const DatasetManifest& manifest, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw DomainError("train_fraction must lie strictly between 0 and 1");
  const auto& images = manifest.images();
  std::vector<bool> in_train(images.size(), false);
  std::mt19937_64 rng(spec.seed);

  if (spec.stratify_by_subject) {
    std::vector<std::vector<std::size_t>> by_subject(manifest.subjects().size());
    for (std::size_t i = 0; i < images.size(); ++i)
      by_subject[manifest.identity_index(images[i].subject_id)].push_back(i);
    for (std::size_t s = 0; s < by_subject.size(); ++s) {
      auto& idx = by_subject[s];
      if (idx.size() < 2)
        throw DomainError("subject '" + manifest.subjects()[s].subject_id + "' has " + std::to_string(idx.size()) +
                          " image(s); stratified split needs at least 2");
      shuffle_indices(idx, rng);
      auto k = train_count(spec.train_fraction, idx.size());
      for (std::size_t i = 0; i < k; ++i) in_train[idx[i]] = true;
    }
  } else {
    if (images.size() < 2) throw DomainError("split needs at least 2 images");
    std::vector<std::size_t> idx(images.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle_indices(idx, rng);
    auto k = train_count(spec.train_fraction, idx.size());
    for (std::size_t i = 0; i < k; ++i) in_train[idx[i]] = true;
  }

  TrainTestSplit out;
  out.seed = spec.seed;
  out.fraction = spec.train_fraction;
  out.stratified = spec.stratify_by_subject;
  for (std::size_t i = 0; i < images.size(); ++i)
    (in_train[i] ? out.train : out.test).push_back(images[i].image_id);
  return out;
}

std::string split_to_json(const TrainTestSplit& split) {
  nlohmann::json j;
  j["train"] = split.train;
  j["test"] = split.test;
  j["seed"] = split.seed;
  j["fraction"] = split.fraction;
  j["stratify_by_subject"] = split.stratified;
  return j.dump(2) + "\n";
}

TrainTestSplit split_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    TrainTestSplit s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.fraction = j.value("fraction", 0.8);
    s.stratified = j.value("stratify_by_subject", true);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed split file: ") + e.what());
  }
}

TrainTestSplit load_split(const std::filesystem::path& path) { return split_from_json(io::read_text(path)); }

void save_split(const TrainTestSplit& split, const std::filesystem::path& path) {
  io::write_text(path, split_to_json(split));
}

}  // namespace ffsense::dataset
