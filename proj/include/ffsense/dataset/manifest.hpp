#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace ffsense::dataset {

enum class Gender { male, female };
enum class Ethnicity { east_asian, west_asian, black, white };
enum class SourceApp { FaceApp, B612, Snapchat, other };
enum class FilterCategory { beautification, occlusion, distortion };

inline constexpr std::string_view kNoFilter = "none";
inline constexpr std::string_view kNeutralFront = "neutral_front";

inline constexpr std::size_t kGenderClasses = 2;
inline constexpr std::size_t kEthnicityClasses = 4;

std::string_view to_string(Gender g);
std::string_view to_string(Ethnicity e);
std::string_view to_string(SourceApp s);
std::string_view to_string(FilterCategory c);

// Parsers return nullopt for labels outside the closed vocabularies.
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Ethnicity> parse_ethnicity(std::string_view s);
std::optional<SourceApp> parse_source_app(std::string_view s);
std::optional<FilterCategory> parse_filter_category(std::string_view s);

// Class lists in model output order.
const std::vector<std::string>& gender_classes();
const std::vector<std::string>& ethnicity_classes();

struct SubjectRecord {
  std::string subject_id;
  int age = 0;
  Gender gender = Gender::male;
  Ethnicity ethnicity = Ethnicity::white;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const SubjectRecord&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::string subject_id;
  std::string pose;
  std::string filter_id{kNoFilter};
  std::string uri;
  nlohmann::json extra = nlohmann::json::object();

  bool is_filtered() const { return filter_id != kNoFilter; }
  bool is_baseline() const { return !is_filtered() && pose == kNeutralFront; }
  bool operator==(const ImageRecord&) const = default;
};

struct FilterSpec {
  std::string filter_id;
  std::string display_name;
  SourceApp source_app = SourceApp::other;
  FilterCategory category = FilterCategory::beautification;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const FilterSpec&) const = default;
};

// Immutable after load. Record order is the file order; the subject order
// defines identity class indices and the filter order defines report row order.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  // Checks every invariant; throws DuplicateId, DanglingReference or DomainError.
  DatasetManifest(std::vector<SubjectRecord> subjects, std::vector<ImageRecord> images,
                  std::vector<FilterSpec> filters, std::map<std::string, std::string> metadata = {});

  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<FilterSpec>& filters() const { return filters_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  std::size_t num_identities() const { return subjects_.size(); }

  const SubjectRecord& subject(std::string_view subject_id) const;
  const ImageRecord& image(std::string_view image_id) const;
  const FilterSpec& filter(std::string_view filter_id) const;
  bool has_image(std::string_view image_id) const;
  bool has_subject(std::string_view subject_id) const;
  bool has_filter(std::string_view filter_id) const;

  // Identity class index of a subject (position in subject order).
  std::size_t identity_index(std::string_view subject_id) const;

  // Directory that relative image locators are resolved against.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }
  std::filesystem::path resolve(const ImageRecord& image) const;

  bool operator==(const DatasetManifest& other) const;

 private:
  std::vector<SubjectRecord> subjects_;
  std::vector<ImageRecord> images_;
  std::vector<FilterSpec> filters_;
  std::map<std::string, std::string> metadata_;
  std::unordered_map<std::string, std::size_t> subject_index_;
  std::unordered_map<std::string, std::size_t> image_index_;
  std::unordered_map<std::string, std::size_t> filter_index_;
  std::filesystem::path base_dir_;
};

enum class DiagnosticKind { parse, dangling_reference, duplicate_id, invariant };

struct Diagnostic {
  DiagnosticKind kind;
  std::size_t line;  // 0 when not tied to a line
  std::string id;    // offending id, if any
  std::string message;
};

// Parses manifest text and reports every violation instead of stopping at the first.
struct ManifestCheck {
  std::optional<DatasetManifest> manifest;
  std::vector<Diagnostic> diagnostics;
};
ManifestCheck check_manifest_text(std::string_view text);

DatasetManifest parse_manifest(std::string_view text);
// Throws IoError when unreadable; otherwise the first diagnostic as a typed exception.
DatasetManifest load_manifest(const std::filesystem::path& path);

std::string serialize_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace ffsense::dataset
