#include "ffsense/nn/checkpoint.hpp"

#include <cstring>

#include "ffsense/error.hpp"
#include "ffsense/io.hpp"

namespace ffsense::nn {

namespace {

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void raw(void* out, std::size_t n) {
    if (n > b_.size() - pos_) throw CorruptPayload("checkpoint truncated");
    std::memcpy(out, b_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    auto n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

static_assert(sizeof(float) == 4);

}  // namespace

Checkpoint make_checkpoint(Model<float>& model, TrainingFingerprint fingerprint) {
  return Checkpoint{model.spec(), model.export_weights(), std::move(fingerprint)};
}

Model<float> instantiate(const Checkpoint& checkpoint) {
  Model<float> model(checkpoint.spec, 0);
  model.import_weights(checkpoint.weights);
  return model;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(canonical_json(c.spec));
  nlohmann::json fp = {{"seed", c.fingerprint.seed}, {"config_hash", c.fingerprint.config_hash}};
  w.str(fp.dump());
  w.u32(static_cast<std::uint32_t>(c.weights.size()));
  for (const auto& [name, rec] : c.weights) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(rec.shape.size()));
    for (auto d : rec.shape) w.u64(d);
    w.raw(rec.values.data(), rec.values.size() * sizeof(float));
  }
  auto digest = io::sha256(w.bytes());
  w.raw(digest.data(), digest.size());
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = sizeof kCheckpointMagic + sizeof(std::uint32_t);
  if (bytes.size() < kHeader + 32) throw CorruptPayload("checkpoint truncated");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw CorruptPayload("not a checkpoint file (bad magic)");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof kCheckpointMagic, sizeof version);
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  auto body = bytes.first(bytes.size() - 32);
  auto digest = io::sha256(body);
  if (std::memcmp(digest.data(), bytes.data() + body.size(), 32) != 0)
    throw CorruptPayload("checkpoint integrity hash mismatch (corrupt or truncated payload)");

  Reader r(body.subspan(kHeader));
  Checkpoint c;
  try {
    c.spec = spec_from_json(nlohmann::json::parse(r.str()));
    auto fp = nlohmann::json::parse(r.str());
    c.fingerprint.seed = fp.at("seed").get<std::uint64_t>();
    c.fingerprint.config_hash = fp.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayload(std::string("checkpoint header unreadable: ") + e.what());
  }
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    TensorRecord rec;
    rec.shape.resize(r.u32());
    std::size_t numel = 1;
    for (auto& d : rec.shape) {
      d = r.u64();
      numel *= d;
    }
    rec.values.resize(numel);
    r.raw(rec.values.data(), numel * sizeof(float));
    c.weights.emplace(std::move(name), std::move(rec));
  }
  if (!r.done()) throw CorruptPayload("trailing bytes after checkpoint tensors");
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  io::write_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_bytes(path)); }

std::string checkpoint_hash(const Checkpoint& checkpoint) {
  auto bytes = encode_checkpoint(checkpoint);
  return io::to_hex(std::span(bytes).last(32));
}

std::size_t load_pretrained_backbone(Model<float>& model, const std::filesystem::path& path) {
  auto source = load_checkpoint(path);
  return model.import_matching(source.weights, "backbone.");
}

}  // namespace ffsense::nn
