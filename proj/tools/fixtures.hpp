#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ffsense/cli/cli.hpp"
#include "ffsense/dataset/manifest.hpp"

// Generators for the test fixtures shipped under tests/fixtures.
namespace ffsense::fixtures {

// Per-filter targets the canned prediction dump is built to reproduce.
struct FilterTargets {
  std::string filter_id;
  std::string display_name;
  dataset::SourceApp app;
  dataset::FilterCategory category;
  double mean_distance;
  double avg_reduction;
  double avg_increment;
  int age_errors_each_way;       // reduced and increased predictions, each
  int male_as_female;
  int female_as_male;
  int predicted_as[4];           // black, east_asian, west_asian, white
};

const std::vector<FilterTargets>& filter_study_targets();

struct CannedStudy {
  dataset::DatasetManifest manifest;   // 102 subjects x (10 poses + 10 filters)
  std::vector<cli::DumpEntry> dump;    // baseline and filtered predictions only
};

CannedStudy canned_filter_study();

// Writes manifest.jsonl and predictions.jsonl into dir.
void write_canned_filter_study(const std::filesystem::path& dir);

// Small learnable image set: 8 subjects x 8 PNGs (1 baseline, 5 poses, 2
// filters), plus manifest.jsonl and a tiny-network train.cfg.
void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed = 7);

// Tiny-network training config matching write_synthetic_dataset.
std::string synthetic_config(std::uint64_t seed, int epochs = 30);

}  // namespace ffsense::fixtures
