#include <cmath>
#include <sstream>

#include "ffsense/cli/cli.hpp"
#include "ffsense/error.hpp"
#include "ffsense/io.hpp"
#include "ffsense/nn/loss.hpp"

namespace ffsense::cli {

using nlohmann::json;

json to_json(const PredictionRecord& r) {
  return {{"image_id", r.image_id},
          {"subject_id", r.subject_id},
          {"filter_id", r.filter_id},
          {"identity_probs", r.identity_probs},
          {"predicted_identity", r.predicted_identity},
          {"age_pred", r.age_pred},
          {"gender_probs", r.gender_probs},
          {"ethnicity_probs", r.ethnicity_probs}};
}

namespace {

void check_distribution(const std::vector<double>& p, const std::string& what, const std::string& image_id) {
  if (p.empty()) throw DomainError(what + " for '" + image_id + "' is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError(what + " for '" + image_id + "' has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-5) throw DomainError(what + " for '" + image_id + "' does not sum to 1");
}

}  // namespace

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.filter_id = j.at("filter_id").get<std::string>();
    r.identity_probs = j.at("identity_probs").get<std::vector<double>>();
    r.predicted_identity = j.at("predicted_identity").get<std::size_t>();
    r.age_pred = j.at("age_pred").get<double>();
    r.gender_probs = j.at("gender_probs").get<std::vector<double>>();
    r.ethnicity_probs = j.at("ethnicity_probs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed prediction record: ") + e.what());
  }
  check_distribution(r.identity_probs, "identity_probs", r.image_id);
  check_distribution(r.gender_probs, "gender_probs", r.image_id);
  check_distribution(r.ethnicity_probs, "ethnicity_probs", r.image_id);
  if (r.predicted_identity != nn::argmax(r.identity_probs))
    throw DomainError("predicted_identity for '" + r.image_id + "' is not the argmax of identity_probs");
  return r;
}

std::string dump_line(const DumpEntry& entry) {
  if (entry.record) return to_json(*entry.record).dump() + "\n";
  return json{{"image_id", entry.image_id}, {"error", entry.error}}.dump() + "\n";
}

std::vector<DumpEntry> parse_dump(std::string_view text) {
  std::vector<DumpEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      DumpEntry e;
      if (j.contains("error")) {
        e.image_id = j.at("image_id").get<std::string>();
        e.error = j.at("error").get<std::string>();
      } else {
        e.record = prediction_from_json(j);
        e.image_id = e.record->image_id;
      }
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<DumpEntry> read_dump(const std::filesystem::path& path) { return parse_dump(io::read_text(path)); }

void write_dump(const std::vector<DumpEntry>& entries, const std::filesystem::path& path) {
  std::string text;
  for (const auto& e : entries) text += dump_line(e);
  io::write_text(path, text);
}

}  // namespace ffsense::cli
