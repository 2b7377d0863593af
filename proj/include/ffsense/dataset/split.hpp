#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ffsense/dataset/manifest.hpp"

namespace ffsense::dataset {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratify_by_subject = true;
};

// Both lists keep manifest image order.
struct TrainTestSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  double fraction = 0.8;
  bool stratified = true;

  bool operator==(const TrainTestSplit&) const = default;
};

// Stratified: each subject contributes round(fraction * k) of its k images to
// train, clamped to [1, k-1] so both halves see every identity.
TrainTestSplit split_train_test(const DatasetManifest& manifest, const SplitSpec& spec);

std::string split_to_json(const TrainTestSplit& split);
TrainTestSplit split_from_json(std::string_view text);
TrainTestSplit load_split(const std::filesystem::path& path);
void save_split(const TrainTestSplit& split, const std::filesystem::path& path);

}  // namespace ffsense::dataset
