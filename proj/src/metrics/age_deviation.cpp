#include <map>

#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::metrics {

AgeDeviationReport age_deviation(std::span<const AgeSample> samples, std::span<const std::string> filter_order) {
  AgeDeviationReport report;
  std::map<std::string, std::size_t> row_of;
  for (const auto& f : filter_order) {
    row_of.emplace(f, report.rows.size());
    report.rows.push_back({.filter_id = f});
  }
  std::vector<double> under, over;
  under.assign(report.rows.size(), 0.0);
  over.assign(report.rows.size(), 0.0);
  for (const auto& s : samples) {
    auto it = row_of.find(s.filter_id);
    if (it == row_of.end()) {
      if (!filter_order.empty()) throw DomainError("filter '" + s.filter_id + "' is not in the filter order");
      it = row_of.emplace(s.filter_id, report.rows.size()).first;
      report.rows.push_back({.filter_id = s.filter_id});
      under.push_back(0.0);
      over.push_back(0.0);
    }
    auto& row = report.rows[it->second];
    const double d = s.predicted - s.actual;
    if (d < 0.0) {
      under[it->second] += d;
      ++row.n_under;
    } else if (d > 0.0) {
      over[it->second] += d;
      ++row.n_over;
    } else {
      ++row.n_exact;
    }
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    if (row.n_under + row.n_exact + row.n_over == 0)
      throw DomainError("filter '" + row.filter_id + "' has no age samples");
    const auto n = row.n_under + row.n_over;
    row.defined = n > 0;
    row.avg_reduction = row.n_under ? under[i] / static_cast<double>(row.n_under) : 0.0;
    row.avg_increment = row.n_over ? over[i] / static_cast<double>(row.n_over) : 0.0;
    row.net_deviation = n ? (under[i] + over[i]) / static_cast<double>(n) : 0.0;
  }
  return report;
}

}  // namespace ffsense::metrics
