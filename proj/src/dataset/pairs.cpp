#include "ffsense/dataset/pairs.hpp"

#include "ffsense/error.hpp"

namespace ffsense::dataset {

std::vector<BaselinePair> pair_baseline_filtered(const DatasetManifest& manifest) {
  const auto n_subjects = manifest.subjects().size();
  const auto n_filters = manifest.filters().size();
  std::vector<const ImageRecord*> baseline(n_subjects, nullptr);
  // filtered[subject][filter] -> images in manifest order
  std::vector<std::vector<std::vector<const ImageRecord*>>> filtered(
      n_subjects, std::vector<std::vector<const ImageRecord*>>(n_filters));

  std::vector<std::size_t> filter_pos;
  for (const auto& img : manifest.images()) {
    auto s = manifest.identity_index(img.subject_id);
    if (img.is_baseline()) {
      if (baseline[s])
        throw DomainError("subject '" + img.subject_id + "' has more than one neutral_front baseline ('" +
                          baseline[s]->image_id + "', '" + img.image_id + "')");
      baseline[s] = &img;
    } else if (img.is_filtered()) {
      std::size_t f = 0;
      while (manifest.filters()[f].filter_id != img.filter_id) ++f;
      filtered[s][f].push_back(&img);
    }
  }

  std::vector<BaselinePair> pairs;
  for (std::size_t s = 0; s < n_subjects; ++s) {
    if (!baseline[s])
      throw DomainError("subject '" + manifest.subjects()[s].subject_id + "' is missing a neutral_front baseline");
    for (std::size_t f = 0; f < n_filters; ++f)
      for (const auto* img : filtered[s][f]) pairs.push_back({baseline[s]->image_id, img->image_id, img->filter_id});
  }
  return pairs;
}

}  // namespace ffsense::dataset
