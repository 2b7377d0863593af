#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ffsense::cli {

// Exit status contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

// ---------------------------------------------------------------------------
// Prediction dump (JSONL)

struct PredictionRecord {
  std::string image_id;
  std::string subject_id;
  std::string filter_id;
  std::vector<double> identity_probs;
  std::size_t predicted_identity = 0;
  double age_pred = 0.0;
  std::vector<double> gender_probs;
  std::vector<double> ethnicity_probs;
};

// A line is either a prediction or {"image_id", "error"}.
struct DumpEntry {
  std::string image_id;
  std::optional<PredictionRecord> record;
  std::string error;
};

nlohmann::json to_json(const PredictionRecord& r);
// Checks that identity_probs is a distribution and predicted_identity its argmax.
PredictionRecord prediction_from_json(const nlohmann::json& j);

std::string dump_line(const DumpEntry& entry);
// Throws ParseError naming the line of a malformed record.
std::vector<DumpEntry> parse_dump(std::string_view text);
std::vector<DumpEntry> read_dump(const std::filesystem::path& path);
void write_dump(const std::vector<DumpEntry>& entries, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Commands. Each returns an exit status and never throws.

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

int cmd_validate(const std::filesystem::path& manifest, Streams io);

struct SplitOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double fraction = 0.8;
  bool stratified = true;
};
int cmd_split(const SplitOptions& opts, Streams io);

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path split;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;  // overrides the config seed
};
int cmd_train(const TrainOptions& opts, Streams io);

enum class Subset { train, test, all };

struct PredictOptions {
  std::filesystem::path checkpoints;
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> split;  // with subset; default all manifest images
  Subset subset = Subset::test;
  std::optional<std::filesystem::path> ids;    // one image id per line
  std::filesystem::path out;
};
int cmd_predict(const PredictOptions& opts, Streams io);

struct AnalyzeOptions {
  std::filesystem::path dump;
  std::filesystem::path manifest;
  std::filesystem::path out;
  double threshold = 0.75;
  // Restricts the classification and regression reports to the split's test ids.
  std::optional<std::filesystem::path> split;
};
int cmd_analyze(const AnalyzeOptions& opts, Streams io);

struct ReportOptions {
  std::filesystem::path analysis;
  std::filesystem::path out;
  std::optional<std::string> format;  // markdown or csv; default both
};
int cmd_report(const ReportOptions& opts, Streams io);

// Files cmd_analyze writes and cmd_report requires.
const std::vector<std::string>& analysis_files();
const std::vector<std::string>& report_files();

// Full command-line entry point.
int run(int argc, const char* const* argv, Streams io);

}  // namespace ffsense::cli
