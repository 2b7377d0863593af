#include "ffsense/dataset/manifest.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "ffsense/error.hpp"
#include "ffsense/io.hpp"

namespace ffsense::dataset {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 2> kGenderNames{"male", "female"};
constexpr std::array<std::string_view, 4> kEthnicityNames{"east_asian", "west_asian", "black", "white"};
constexpr std::array<std::string_view, 4> kSourceAppNames{"FaceApp", "B612", "Snapchat", "other"};
constexpr std::array<std::string_view, 3> kCategoryNames{"beautification", "occlusion", "distortion"};

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<Enum>(i);
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Gender g) { return kGenderNames[static_cast<std::size_t>(g)]; }
std::string_view to_string(Ethnicity e) { return kEthnicityNames[static_cast<std::size_t>(e)]; }
std::string_view to_string(SourceApp s) { return kSourceAppNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(FilterCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<Gender> parse_gender(std::string_view s) { return parse_enum<Gender>(kGenderNames, s); }
std::optional<Ethnicity> parse_ethnicity(std::string_view s) { return parse_enum<Ethnicity>(kEthnicityNames, s); }
std::optional<SourceApp> parse_source_app(std::string_view s) { return parse_enum<SourceApp>(kSourceAppNames, s); }
std::optional<FilterCategory> parse_filter_category(std::string_view s) {
  return parse_enum<FilterCategory>(kCategoryNames, s);
}

const std::vector<std::string>& gender_classes() {
  static const std::vector<std::string> classes(kGenderNames.begin(), kGenderNames.end());
  return classes;
}

const std::vector<std::string>& ethnicity_classes() {
  static const std::vector<std::string> classes(kEthnicityNames.begin(), kEthnicityNames.end());
  return classes;
}

// ---------------------------------------------------------------------------
// DatasetManifest

DatasetManifest::DatasetManifest(std::vector<SubjectRecord> subjects, std::vector<ImageRecord> images,
                                 std::vector<FilterSpec> filters, std::map<std::string, std::string> metadata)
    : subjects_(std::move(subjects)),
      images_(std::move(images)),
      filters_(std::move(filters)),
      metadata_(std::move(metadata)) {
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    if (subjects_[i].age < 0) throw DomainError("subject '" + subjects_[i].subject_id + "' has negative age");
    if (!subject_index_.emplace(subjects_[i].subject_id, i).second) throw DuplicateId(subjects_[i].subject_id);
  }
  for (std::size_t i = 0; i < filters_.size(); ++i) {
    if (filters_[i].filter_id == kNoFilter) throw DomainError("filter id 'none' is reserved");
    if (!filter_index_.emplace(filters_[i].filter_id, i).second) throw DuplicateId(filters_[i].filter_id);
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const auto& img = images_[i];
    if (!image_index_.emplace(img.image_id, i).second) throw DuplicateId(img.image_id);
    if (!subject_index_.contains(img.subject_id)) throw DanglingReference(img.subject_id);
    if (img.is_filtered()) {
      if (!filter_index_.contains(img.filter_id)) throw DanglingReference(img.filter_id);
      if (img.pose != kNeutralFront)
        throw DomainError("filtered image '" + img.image_id + "' must have pose neutral_front, got '" + img.pose +
                          "'");
    }
  }
}

const SubjectRecord& DatasetManifest::subject(std::string_view subject_id) const {
  auto it = subject_index_.find(std::string(subject_id));
  if (it == subject_index_.end()) throw DanglingReference(std::string(subject_id));
  return subjects_[it->second];
}

const ImageRecord& DatasetManifest::image(std::string_view image_id) const {
  auto it = image_index_.find(std::string(image_id));
  if (it == image_index_.end()) throw DanglingReference(std::string(image_id));
  return images_[it->second];
}

const FilterSpec& DatasetManifest::filter(std::string_view filter_id) const {
  auto it = filter_index_.find(std::string(filter_id));
  if (it == filter_index_.end()) throw DanglingReference(std::string(filter_id));
  return filters_[it->second];
}

bool DatasetManifest::has_image(std::string_view id) const { return image_index_.contains(std::string(id)); }
bool DatasetManifest::has_subject(std::string_view id) const { return subject_index_.contains(std::string(id)); }
bool DatasetManifest::has_filter(std::string_view id) const { return filter_index_.contains(std::string(id)); }

std::size_t DatasetManifest::identity_index(std::string_view subject_id) const {
  auto it = subject_index_.find(std::string(subject_id));
  if (it == subject_index_.end()) throw DanglingReference(std::string(subject_id));
  return it->second;
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& image) const {
  std::filesystem::path p(image.uri);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

bool DatasetManifest::operator==(const DatasetManifest& other) const {
  return subjects_ == other.subjects_ && images_ == other.images_ && filters_ == other.filters_ &&
         metadata_ == other.metadata_;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct RecordError {
  DiagnosticKind kind;
  std::string id;
  std::string message;
};

std::string field_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw RecordError{DiagnosticKind::parse, {}, std::string("missing field '") + key + "'"};
  if (!it->is_string()) throw RecordError{DiagnosticKind::parse, {}, std::string("field '") + key + "' must be a string"};
  return it->get<std::string>();
}

json extras(const json& j, std::initializer_list<const char*> known) {
  json out = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "kind") continue;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      out[it.key()] = it.value();
  }
  return out;
}

SubjectRecord parse_subject(const json& j) {
  SubjectRecord s;
  s.subject_id = field_string(j, "subject_id");
  auto age = j.find("age");
  if (age == j.end() || !age->is_number_integer() || age->get<long long>() < 0)
    throw RecordError{DiagnosticKind::parse, s.subject_id, "field 'age' must be a non-negative integer"};
  s.age = static_cast<int>(age->get<long long>());
  auto g = field_string(j, "gender");
  auto gender = parse_gender(g);
  if (!gender) throw RecordError{DiagnosticKind::invariant, s.subject_id, "gender '" + g + "' is not male/female"};
  s.gender = *gender;
  auto e = field_string(j, "ethnicity");
  auto eth = parse_ethnicity(e);
  if (!eth) throw RecordError{DiagnosticKind::invariant, s.subject_id, "ethnicity '" + e + "' is not a known class"};
  s.ethnicity = *eth;
  s.extra = extras(j, {"subject_id", "age", "gender", "ethnicity"});
  return s;
}

ImageRecord parse_image(const json& j) {
  ImageRecord r;
  r.image_id = field_string(j, "image_id");
  r.subject_id = field_string(j, "subject_id");
  r.pose = field_string(j, "pose");
  r.filter_id = j.contains("filter_id") ? field_string(j, "filter_id") : std::string(kNoFilter);
  r.uri = field_string(j, "uri");
  r.extra = extras(j, {"image_id", "subject_id", "pose", "filter_id", "uri"});
  return r;
}

FilterSpec parse_filter(const json& j) {
  FilterSpec f;
  f.filter_id = field_string(j, "filter_id");
  f.display_name = j.contains("display_name") ? field_string(j, "display_name") : f.filter_id;
  auto app = field_string(j, "source_app");
  auto parsed_app = parse_source_app(app);
  if (!parsed_app) throw RecordError{DiagnosticKind::invariant, f.filter_id, "unknown source_app '" + app + "'"};
  f.source_app = *parsed_app;
  auto cat = field_string(j, "category");
  auto parsed_cat = parse_filter_category(cat);
  if (!parsed_cat) throw RecordError{DiagnosticKind::invariant, f.filter_id, "unknown category '" + cat + "'"};
  f.category = *parsed_cat;
  f.extra = extras(j, {"filter_id", "display_name", "source_app", "category"});
  return f;
}

[[noreturn]] void throw_diagnostic(const Diagnostic& d) {
  switch (d.kind) {
    case DiagnosticKind::parse:
      throw ParseError(d.message, d.line);
    case DiagnosticKind::dangling_reference:
      throw DanglingReference(d.id);
    case DiagnosticKind::duplicate_id:
      throw DuplicateId(d.id);
    case DiagnosticKind::invariant:
      break;
  }
  throw DomainError(d.line ? "line " + std::to_string(d.line) + ": " + d.message : d.message);
}

}  // namespace

ManifestCheck check_manifest_text(std::string_view text) {
  ManifestCheck result;
  auto& diags = result.diagnostics;

  std::vector<SubjectRecord> subjects;
  std::vector<ImageRecord> images;
  std::vector<FilterSpec> filters;
  std::map<std::string, std::string> metadata;
  std::vector<std::size_t> image_lines;
  std::map<std::string, std::size_t> subject_lines, filter_lines, image_id_lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      diags.push_back({DiagnosticKind::parse, line_no, {}, std::string("malformed JSON: ") + e.what()});
      continue;
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
      diags.push_back({DiagnosticKind::parse, line_no, {}, "record must be an object with a string 'kind'"});
      continue;
    }
    const auto kind = j["kind"].get<std::string>();
    try {
      if (kind == "subject") {
        auto s = parse_subject(j);
        if (!subject_lines.emplace(s.subject_id, line_no).second) {
          diags.push_back({DiagnosticKind::duplicate_id, line_no, s.subject_id, "duplicate subject id '" + s.subject_id + "'"});
          continue;
        }
        subjects.push_back(std::move(s));
      } else if (kind == "image") {
        auto r = parse_image(j);
        if (!image_id_lines.emplace(r.image_id, line_no).second) {
          diags.push_back({DiagnosticKind::duplicate_id, line_no, r.image_id, "duplicate image id '" + r.image_id + "'"});
          continue;
        }
        images.push_back(std::move(r));
        image_lines.push_back(line_no);
      } else if (kind == "filter") {
        auto f = parse_filter(j);
        if (f.filter_id == kNoFilter) {
          diags.push_back({DiagnosticKind::invariant, line_no, f.filter_id, "filter id 'none' is reserved"});
          continue;
        }
        if (!filter_lines.emplace(f.filter_id, line_no).second) {
          diags.push_back({DiagnosticKind::duplicate_id, line_no, f.filter_id, "duplicate filter id '" + f.filter_id + "'"});
          continue;
        }
        filters.push_back(std::move(f));
      } else if (kind == "metadata") {
        for (auto it = j.begin(); it != j.end(); ++it) {
          if (it.key() == "kind") continue;
          metadata[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
        }
      } else {
        diags.push_back({DiagnosticKind::parse, line_no, {}, "unknown record kind '" + kind + "'"});
      }
    } catch (const RecordError& e) {
      diags.push_back({e.kind, line_no, e.id, e.message});
    }
  }

  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    if (!subject_lines.contains(img.subject_id))
      diags.push_back({DiagnosticKind::dangling_reference, image_lines[i], img.subject_id,
                       "image '" + img.image_id + "' references unknown subject '" + img.subject_id + "'"});
    if (img.is_filtered()) {
      if (!filter_lines.contains(img.filter_id))
        diags.push_back({DiagnosticKind::dangling_reference, image_lines[i], img.filter_id,
                         "image '" + img.image_id + "' references unknown filter '" + img.filter_id + "'"});
      if (img.pose != kNeutralFront)
        diags.push_back({DiagnosticKind::invariant, image_lines[i], img.image_id,
                         "filtered image '" + img.image_id + "' must have pose neutral_front, got '" + img.pose + "'"});
    }
  }

  if (diags.empty())
    result.manifest.emplace(std::move(subjects), std::move(images), std::move(filters), std::move(metadata));
  return result;
}

DatasetManifest parse_manifest(std::string_view text) {
  auto check = check_manifest_text(text);
  if (!check.diagnostics.empty()) throw_diagnostic(check.diagnostics.front());
  return std::move(*check.manifest);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto manifest = parse_manifest(io::read_text(path));
  manifest.set_base_dir(path.parent_path());
  return manifest;
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  if (!m.metadata().empty()) {
    json j = {{"kind", "metadata"}};
    for (const auto& [k, v] : m.metadata()) j[k] = v;
    out << j.dump() << '\n';
  }
  for (const auto& f : m.filters()) {
    json j = f.extra;
    j["kind"] = "filter";
    j["filter_id"] = f.filter_id;
    j["display_name"] = f.display_name;
    j["source_app"] = to_string(f.source_app);
    j["category"] = to_string(f.category);
    out << j.dump() << '\n';
  }
  for (const auto& s : m.subjects()) {
    json j = s.extra;
    j["kind"] = "subject";
    j["subject_id"] = s.subject_id;
    j["age"] = s.age;
    j["gender"] = to_string(s.gender);
    j["ethnicity"] = to_string(s.ethnicity);
    out << j.dump() << '\n';
  }
  for (const auto& r : m.images()) {
    json j = r.extra;
    j["kind"] = "image";
    j["image_id"] = r.image_id;
    j["subject_id"] = r.subject_id;
    j["pose"] = r.pose;
    j["filter_id"] = r.filter_id;
    j["uri"] = r.uri;
    out << j.dump() << '\n';
  }
  return out.str();
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  io::write_text(path, serialize_manifest(manifest));
}

}  // namespace ffsense::dataset
