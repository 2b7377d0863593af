#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ffsense/dataset/manifest.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::report {

enum class Format { markdown, csv };

std::string_view to_string(Format f);
std::optional<Format> parse_format(std::string_view s);

// filter_id -> row label ("Hipster Look Filter Snapchat"). Ids without an
// entry are printed as-is.
using FilterLabels = std::map<std::string, std::string>;

FilterLabels filter_labels(const dataset::DatasetManifest& manifest);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const Table&) const = default;
};

// Fixed 6 fractional digits, '.' decimal point regardless of locale.
std::string format_number(double value);

std::string render(const Table& table, Format format);

Table to_table(const metrics::FilterDistortionReport& report, const FilterLabels& labels = {});
Table to_table(const metrics::AgeDeviationReport& report, const FilterLabels& labels = {});
Table to_table(const metrics::MispredictionTable& table, const FilterLabels& labels = {});
Table to_table(const metrics::ClassificationReport& report);
Table to_table(const metrics::RegressionReport& report);

template <typename Report>
std::string render_table(const Report& report, Format format, const FilterLabels& labels) {
  return render(to_table(report, labels), format);
}

template <typename Report>
std::string render_table(const Report& report, Format format) {
  return render(to_table(report), format);
}

// RFC 4180 style; the first record becomes the header. Throws ParseError on
// an unterminated quote or a ragged row.
Table parse_csv(std::string_view text);

// One aligned block per filter, in the given order. Throws DomainError when
// the matrices do not share a class list.
std::string render_confusion_grid(const std::vector<std::pair<std::string, metrics::ConfusionMatrix>>& matrices,
                                  const FilterLabels& labels = {});

// ---------------------------------------------------------------------------
// Usability verdicts

enum class Band { ok, high, breaking };
std::string_view to_string(Band band);

inline constexpr double kHighCut = 0.5;
inline constexpr double kBreakingCut = metrics::kBreakingThreshold;
inline constexpr double kAgeSkewYears = 0.5;
inline constexpr double kErrorConcentration = 0.5;

Band band_for(double mean_d);

struct UsabilityVerdict {
  std::string filter_id;
  double mean_d = 0.0;
  Band band = Band::ok;
  std::vector<std::string> notes;
};

struct UsabilityReport {
  std::vector<UsabilityVerdict> verdicts;
  std::string document;  // markdown
};

// Verdicts follow the distortion row order. Throws DomainError when the four
// inputs do not cover the same filters.
UsabilityReport usability_report(const metrics::FilterDistortionReport& distortion,
                                 const metrics::AgeDeviationReport& age, const metrics::MispredictionTable& gender,
                                 const metrics::MispredictionTable& ethnicity, const FilterLabels& labels = {});

}  // namespace ffsense::report
