#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ffsense/nn/loss.hpp"
#include "ffsense/nn/network_spec.hpp"

namespace ffsense::train {

enum class OptimizerKind { sgd_momentum, adaptive_moment };

std::string_view to_string(OptimizerKind kind);
std::string_view to_string(nn::LossKind kind);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::adaptive_moment;
  nn::LossKind loss = nn::LossKind::cross_entropy;
  std::uint64_t seed = 0;
  bool freeze_extractor = true;
  bool class_weighting = false;  // inverse-frequency loss weights

  // Throws DomainError on non-positive epochs/batch/learning rate.
  void validate() const;
};

// Everything `ffsense train` reads from the flat key=value config file.
struct PipelineConfig {
  TrainConfig identity;
  TrainConfig head;  // loss is set per head; age uses age_loss
  nn::LossKind age_loss = nn::LossKind::mse;
  nn::ExtractorSpec extractor;
  int feature_dim = nn::kReferenceFeatureDim;
  std::vector<int> head_hidden{nn::kDefaultHeadHidden};
  std::string config_hash;  // hex SHA-256 of the normalized key=value set

  nn::NetworkSpec identity_spec(int num_identities) const;
};

// Keys that must appear in every config file.
const std::vector<std::string>& required_config_keys();

// Parses "key = value" lines; '#' starts a comment. Throws ParseError on a
// malformed line and DomainError naming a missing, unknown or invalid key.
std::map<std::string, std::string> parse_key_values(std::string_view text);
PipelineConfig parse_pipeline_config(std::string_view text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace ffsense::train
