#include "ffsense/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ffsense/error.hpp"

namespace ffsense::report {

std::string_view to_string(Format f) { return f == Format::markdown ? "markdown" : "csv"; }

std::optional<Format> parse_format(std::string_view s) {
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "csv") return Format::csv;
  return std::nullopt;
}

FilterLabels filter_labels(const dataset::DatasetManifest& manifest) {
  FilterLabels out;
  for (const auto& f : manifest.filters()) {
    std::string label = f.display_name.empty() ? f.filter_id : f.display_name;
    if (f.source_app != dataset::SourceApp::other) label += " " + std::string(dataset::to_string(f.source_app));
    out.emplace(f.filter_id, std::move(label));
  }
  return out;
}

std::string format_number(double value) {
  // fmt ignores the global locale unless asked with 'L'.
  auto s = fmt::format("{:.6f}", value);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace {

std::string label_of(const FilterLabels& labels, const std::string& id) {
  auto it = labels.find(id);
  return it == labels.end() ? id : it->second;
}

std::string count_str(std::int64_t v) { return fmt::format("{}", v); }

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool is_numeric(const std::string& s) {
  if (s.empty()) return true;
  return s.find_first_not_of("-+.0123456789") == std::string::npos || s == "n/a";
}

std::vector<std::string> misprediction_columns(const metrics::MispredictionTable& t) {
  std::vector<std::string> cols;
  if (t.task == metrics::Task::ethnicity) return t.classes;
  for (const auto& a : t.classes)
    for (const auto& p : t.classes)
      if (a != p) cols.push_back(a + "->" + p);
  return cols;
}

}  // namespace

std::string render(const Table& table, Format format) {
  std::string out;
  if (format == Format::csv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_cell(cells[i]);
      }
      out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
  }
  auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) out += " " + md_cell(c) + " |";
    out += '\n';
  };
  line(table.header);
  out += '|';
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const bool numeric = !table.rows.empty() && std::all_of(table.rows.begin(), table.rows.end(), [&](const auto& r) {
      return i < r.size() && is_numeric(r[i]);
    });
    out += numeric ? " ---: |" : " --- |";
  }
  out += '\n';
  for (const auto& r : table.rows) line(r);
  return out;
}

Table to_table(const metrics::FilterDistortionReport& report, const FilterLabels& labels) {
  Table t{{"Filter", "Mean L2 distance", "Pairs", "Breaking"}, {}};
  for (const auto& r : report.rows)
    t.rows.push_back({label_of(labels, r.filter_id), format_number(r.mean_d), count_str(r.n_pairs),
                      r.breaking ? "yes" : "no"});
  return t;
}

Table to_table(const metrics::AgeDeviationReport& report, const FilterLabels& labels) {
  Table t{{"Filter", "Avg reduction (yrs)", "Avg increment (yrs)", "Net deviation (yrs)", "Under", "Over", "Exact"},
          {}};
  for (const auto& r : report.rows)
    t.rows.push_back({label_of(labels, r.filter_id), format_number(r.avg_reduction), format_number(r.avg_increment),
                      r.defined ? format_number(r.net_deviation) : "n/a", count_str(r.n_under), count_str(r.n_over),
                      count_str(r.n_exact)});
  return t;
}

Table to_table(const metrics::MispredictionTable& table, const FilterLabels& labels) {
  const auto cols = misprediction_columns(table);
  Table t;
  t.header.push_back("Filter");
  t.header.insert(t.header.end(), cols.begin(), cols.end());
  t.header.push_back("Total errors");
  for (const auto& r : table.rows) {
    std::vector<std::string> row{label_of(labels, r.filter_id)};
    for (const auto& c : cols) row.push_back(count_str(r.count(c)));
    row.push_back(count_str(r.total_errors()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table to_table(const metrics::ClassificationReport& report) {
  Table t{{"Class", "Precision", "Recall", "F1", "Support"}, {}};
  for (const auto& c : report.per_class)
    t.rows.push_back(
        {c.label, format_number(c.precision), format_number(c.recall), format_number(c.f1), count_str(c.support)});
  if (report.total > 0) {
    const char* avg = report.averaging == metrics::Averaging::macro ? "macro avg" : "weighted avg";
    t.rows.push_back({avg, format_number(report.precision), format_number(report.recall), format_number(report.f1),
                      count_str(report.total)});
    t.rows.push_back({"accuracy", "", "", format_number(report.accuracy), count_str(report.total)});
  }
  return t;
}

Table to_table(const metrics::RegressionReport& report) {
  return {{"Metric", "Value"},
          {{"r2", format_number(report.r2)}, {"mae", format_number(report.mae)}, {"mse", format_number(report.mse)}}};
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false, in_record = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    in_record = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      record.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(cell));
      cell.clear();
      records.push_back(std::move(record));
      record.clear();
      in_record = false;
      ++line;
    } else {
      cell += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line);
  if (in_record) {
    record.push_back(std::move(cell));
    records.push_back(std::move(record));
  }
  Table t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(records[r].size()),
                       r + 1);
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::string render_confusion_grid(const std::vector<std::pair<std::string, metrics::ConfusionMatrix>>& matrices,
                                  const FilterLabels& labels) {
  if (matrices.empty()) return {};
  const auto& classes = matrices.front().second.classes;
  for (const auto& [id, m] : matrices)
    if (m.classes != classes) throw DomainError("confusion matrix for '" + id + "' has a different class list");

  const std::string corner = "actual \\ predicted";
  std::size_t label_w = corner.size(), cell_w = 1;
  for (const auto& c : classes) {
    label_w = std::max(label_w, c.size());
    cell_w = std::max(cell_w, c.size());
  }
  for (const auto& [id, m] : matrices)
    for (const auto& row : m.counts)
      for (auto v : row) cell_w = std::max(cell_w, count_str(v).size());

  std::string out;
  for (std::size_t b = 0; b < matrices.size(); ++b) {
    const auto& [id, m] = matrices[b];
    if (b) out += '\n';
    out += label_of(labels, id) + '\n';
    out += fmt::format("{:<{}}", corner, label_w);
    for (const auto& c : classes) out += fmt::format("  {:>{}}", c, cell_w);
    out += '\n';
    for (std::size_t a = 0; a < classes.size(); ++a) {
      out += fmt::format("{:<{}}", classes[a], label_w);
      for (auto v : m.counts[a]) out += fmt::format("  {:>{}}", v, cell_w);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Band band) {
  switch (band) {
    case Band::ok:
      return "ok";
    case Band::high:
      return "high";
    case Band::breaking:
      return "breaking";
  }
  return "ok";
}

Band band_for(double mean_d) {
  if (mean_d > kBreakingCut) return Band::breaking;
  if (mean_d > kHighCut) return Band::high;
  return Band::ok;
}

namespace {

std::set<std::string> ids_of(const auto& rows) {
  std::set<std::string> out;
  for (const auto& r : rows) out.insert(r.filter_id);
  return out;
}

const metrics::MispredictionRow* find_row(const metrics::MispredictionTable& t, const std::string& id) {
  for (const auto& r : t.rows)
    if (r.filter_id == id) return &r;
  return nullptr;
}

std::optional<std::string> concentration_note(const metrics::MispredictionRow& row, std::string_view what) {
  const auto total = row.total_errors();
  if (total == 0) return std::nullopt;
  for (const auto& c : row.counts)
    if (static_cast<double>(c.count) > kErrorConcentration * static_cast<double>(total))
      return fmt::format("{} {} ({} of {} errors)", what, c.descriptor, c.count, total);
  return std::nullopt;
}

}  // namespace

UsabilityReport usability_report(const metrics::FilterDistortionReport& distortion,
                                 const metrics::AgeDeviationReport& age, const metrics::MispredictionTable& gender,
                                 const metrics::MispredictionTable& ethnicity, const FilterLabels& labels) {
  const auto ids = ids_of(distortion.rows);
  auto check = [&](const std::set<std::string>& other, std::string_view what) {
    if (other == ids) return;
    std::vector<std::string> diff;
    std::set_symmetric_difference(ids.begin(), ids.end(), other.begin(), other.end(), std::back_inserter(diff));
    throw DomainError(fmt::format("{} filters differ from distortion filters: {}", what, fmt::join(diff, ", ")));
  };
  check(ids_of(age.rows), "age deviation");
  check(ids_of(gender.rows), "gender misprediction");
  check(ids_of(ethnicity.rows), "ethnicity misprediction");

  UsabilityReport report;
  for (const auto& d : distortion.rows) {
    UsabilityVerdict v{d.filter_id, d.mean_d, band_for(d.mean_d), {}};
    for (const auto& a : age.rows) {
      if (a.filter_id != d.filter_id || !a.defined || std::abs(a.net_deviation) <= kAgeSkewYears) continue;
      v.notes.push_back(fmt::format("age skew: predicts {} by {} years on average",
                                    a.net_deviation < 0 ? "younger" : "older", format_number(std::abs(a.net_deviation))));
    }
    if (auto n = concentration_note(*find_row(gender, d.filter_id), "gender errors mostly")) v.notes.push_back(*n);
    if (auto n = concentration_note(*find_row(ethnicity, d.filter_id), "ethnicity bias towards")) v.notes.push_back(*n);
    report.verdicts.push_back(std::move(v));
  }

  std::string doc = "# Filter usability\n\n";
  Table t{{"Filter", "Mean L2 distance", "Band", "Notes"}, {}};
  for (const auto& v : report.verdicts)
    t.rows.push_back({label_of(labels, v.filter_id), format_number(v.mean_d), std::string(to_string(v.band)),
                      v.notes.empty() ? "-" : fmt::format("{}", fmt::join(v.notes, "; "))});
  doc += render(t, Format::markdown);
  doc += fmt::format(
      "\nBands: ok when d <= {0}, high when {0} < d <= {1}, breaking when d > {1}. "
      "Age skew is noted when the net deviation exceeds {2} years in magnitude. "
      "A misprediction direction is noted when it holds more than {3}% of a filter's errors.\n",
      format_number(kHighCut), format_number(kBreakingCut), format_number(kAgeSkewYears),
      static_cast<int>(kErrorConcentration * 100));
  report.document = std::move(doc);
  return report;
}

}  // namespace ffsense::report
