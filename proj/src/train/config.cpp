#include "ffsense/train/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "ffsense/error.hpp"
#include "ffsense/io.hpp"

namespace ffsense::train {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd_momentum ? "sgd_momentum" : "adaptive_moment";
}

std::string_view to_string(nn::LossKind kind) {
  switch (kind) {
    case nn::LossKind::cross_entropy:
      return "cross_entropy";
    case nn::LossKind::mse:
      return "mse";
    case nn::LossKind::mae:
      return "mae";
  }
  return "cross_entropy";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be a positive integer, got " + std::to_string(epochs));
  if (batch_size < 1) throw DomainError("batch_size must be a positive integer, got " + std::to_string(batch_size));
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
}

nn::NetworkSpec PipelineConfig::identity_spec(int num_identities) const {
  auto spec = nn::build_facefilternet(num_identities);
  spec.extractor = extractor;
  spec.feature_dim = feature_dim;
  spec.validate();
  return spec;
}

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys{"epochs", "batch_size", "learning_rate", "optimizer", "seed"};
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "epochs", "batch_size", "learning_rate", "optimizer", "seed", "freeze_extractor", "class_weighting",
      "head_epochs", "head_batch_size", "head_learning_rate", "head_optimizer", "age_loss", "input_size",
      "stem_channels", "stem_kernel", "stem_stride", "stem_pool", "backbone_blocks", "backbone_width",
      "backbone_expansion", "zero_init_residual", "pretrained_weights", "bridge_blocks", "bridge_width",
      "bridge_kernel", "bridge_scale", "feature_dim", "head_hidden"};
  return keys;
}

class Values {
 public:
  explicit Values(const std::map<std::string, std::string>& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.contains(key); }

  long long integer(const std::string& key) const {
    const auto& s = kv_.at(key);
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) invalid(key, "an integer");
    return v;
  }
  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? static_cast<int>(integer(key)) : fallback;
  }
  double real(const std::string& key) const {
    const auto& s = kv_.at(key);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) invalid(key, "a number");
    return v;
  }
  double real_or(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }
  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& s = kv_.at(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    invalid(key, "true or false");
  }
  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(kv_.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = trim(item);
      int v = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || p != t.data() + t.size()) invalid(key, "a comma-separated integer list");
      out.push_back(v);
    }
    return out;
  }
  OptimizerKind optimizer(const std::string& key) const {
    const auto& s = kv_.at(key);
    if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
    if (s == "adaptive_moment") return OptimizerKind::adaptive_moment;
    invalid(key, "sgd_momentum or adaptive_moment");
  }
  const std::string& str(const std::string& key) const { return kv_.at(key); }

  [[noreturn]] void invalid(const std::string& key, const char* expected) const {
    throw DomainError("config key '" + key + "' must be " + expected + ", got '" + kv_.at(key) + "'");
  }

 private:
  const std::map<std::string, std::string>& kv_;
};

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value, got '" + std::string(line) + "'", line_no);
    auto key = std::string(trim(line.substr(0, eq)));
    auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (!out.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'", line_no);
  }
  return out;
}

PipelineConfig parse_pipeline_config(std::string_view text) {
  const auto kv = parse_key_values(text);
  for (const auto& key : required_config_keys())
    if (!kv.contains(key)) throw DomainError("missing config key '" + key + "'");
  for (const auto& [key, value] : kv)
    if (!known_keys().contains(key)) throw DomainError("unknown config key '" + key + "'");

  Values v(kv);
  PipelineConfig cfg;
  auto& id = cfg.identity;
  id.epochs = static_cast<int>(v.integer("epochs"));
  id.batch_size = static_cast<int>(v.integer("batch_size"));
  id.learning_rate = v.real("learning_rate");
  id.optimizer = v.optimizer("optimizer");
  const auto seed = v.integer("seed");
  if (seed < 0) v.invalid("seed", "a non-negative integer");
  id.seed = static_cast<std::uint64_t>(seed);
  id.freeze_extractor = v.boolean_or("freeze_extractor", true);
  if (v.has("class_weighting")) {
    const auto& s = v.str("class_weighting");
    if (s == "inverse_frequency")
      id.class_weighting = true;
    else if (s != "none")
      v.invalid("class_weighting", "none or inverse_frequency");
  }
  id.loss = nn::LossKind::cross_entropy;
  id.validate();

  cfg.head = id;
  cfg.head.epochs = v.integer_or("head_epochs", id.epochs);
  cfg.head.batch_size = v.integer_or("head_batch_size", id.batch_size);
  cfg.head.learning_rate = v.real_or("head_learning_rate", id.learning_rate);
  if (v.has("head_optimizer")) cfg.head.optimizer = v.optimizer("head_optimizer");
  cfg.head.validate();

  if (v.has("age_loss")) {
    const auto& s = v.str("age_loss");
    if (s == "mse")
      cfg.age_loss = nn::LossKind::mse;
    else if (s == "mae")
      cfg.age_loss = nn::LossKind::mae;
    else
      v.invalid("age_loss", "mse or mae");
  }

  auto& e = cfg.extractor;
  auto& b = e.backbone;
  e.input_size = v.integer_or("input_size", e.input_size);
  b.stem_channels = v.integer_or("stem_channels", b.stem_channels);
  b.stem_kernel = v.integer_or("stem_kernel", b.stem_kernel);
  b.stem_stride = v.integer_or("stem_stride", b.stem_stride);
  b.stem_pool = v.boolean_or("stem_pool", b.stem_pool);
  if (v.has("backbone_blocks")) b.stage_blocks = v.int_list("backbone_blocks");
  b.base_width = v.integer_or("backbone_width", b.base_width);
  b.expansion = v.integer_or("backbone_expansion", b.expansion);
  b.zero_init_residual = v.boolean_or("zero_init_residual", b.zero_init_residual);
  if (v.has("pretrained_weights")) b.pretrained = v.str("pretrained_weights");
  e.bridge.blocks = v.integer_or("bridge_blocks", e.bridge.blocks);
  e.bridge.branch_width = v.integer_or("bridge_width", e.bridge.branch_width);
  e.bridge.kernel = v.integer_or("bridge_kernel", e.bridge.kernel);
  e.bridge.scale = v.real_or("bridge_scale", e.bridge.scale);
  cfg.feature_dim = v.integer_or("feature_dim", cfg.feature_dim);
  if (v.has("head_hidden")) cfg.head_hidden = v.int_list("head_hidden");

  std::string normalized;
  for (const auto& [key, value] : kv) normalized += key + "=" + value + "\n";
  cfg.config_hash = io::sha256_hex(normalized);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(io::read_text(path));
}

}  // namespace ffsense::train
