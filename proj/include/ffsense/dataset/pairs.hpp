#pragma once

#include <string>
#include <vector>

#include "ffsense/dataset/manifest.hpp"

namespace ffsense::dataset {

struct BaselinePair {
  std::string baseline_image_id;
  std::string filtered_image_id;
  std::string filter_id;

  bool operator==(const BaselinePair&) const = default;
};

// One pair per filtered image, subject-major, then manifest filter order.
// Every subject must have exactly one unfiltered neutral_front image.
std::vector<BaselinePair> pair_baseline_filtered(const DatasetManifest& manifest);

}  // namespace ffsense::dataset
