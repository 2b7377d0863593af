#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ffsense/nn/model.hpp"
#include "ffsense/nn/network_spec.hpp"

namespace ffsense::nn {

inline constexpr char kCheckpointMagic[8] = {'F', 'F', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingFingerprint {
  std::uint64_t seed = 0;
  std::string config_hash;

  bool operator==(const TrainingFingerprint&) const = default;
};

struct Checkpoint {
  NetworkSpec spec;
  TensorStore weights;
  TrainingFingerprint fingerprint;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(Model<float>& model, TrainingFingerprint fingerprint = {});
// Builds the network and loads the weights; throws ShapeError on mismatch.
Model<float> instantiate(const Checkpoint& checkpoint);

// Container layout (little-endian):
//   8  bytes  magic "FFSCKPT\0"
//   u32       format version
//   u32 + n   canonical NetworkSpec JSON
//   u32 + n   fingerprint JSON {"seed", "config_hash"}
//   u32       tensor count, then per tensor (sorted by name):
//             u32 + n name, u32 rank, rank x u64 dims, f32 values
//   32 bytes  SHA-256 of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
// Throws CorruptPayload (bad magic, truncation, hash mismatch) or VersionMismatch.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Hex SHA-256 trailer of the encoded container; stable identity for caches.
std::string checkpoint_hash(const Checkpoint& checkpoint);

// Seeds backbone.* tensors from another checkpoint file. Returns tensors copied.
std::size_t load_pretrained_backbone(Model<float>& model, const std::filesystem::path& path);

}  // namespace ffsense::nn
