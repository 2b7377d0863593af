#include <cmath>
#include <map>

#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::metrics {

std::vector<double> l2_normalize(std::span<const double> v) {
  if (v.empty()) throw DomainError("l2_normalize: empty vector");
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double norm = std::sqrt(ss);
  if (!(norm > 1e-12)) throw DomainError("l2_normalize: zero vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

DistortionScore pair_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw DomainError("pair_distance: length mismatch (" + std::to_string(p.size()) + " vs " +
                      std::to_string(q.size()) + ")");
  const auto lp = l2_normalize(p);
  const auto lq = l2_normalize(q);
  double ss = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double d = lq[i] - lp[i];
    ss += d * d;
  }
  return {std::sqrt(ss)};
}

FilterDistortionReport filter_distortion(std::span<const DistortionPair> pairs, double threshold,
                                         std::span<const std::string> filter_order) {
  if (pairs.empty()) throw DomainError("filter_distortion: empty pair list");
  FilterDistortionReport report;
  report.threshold = threshold;
  std::map<std::string, std::size_t> row_of;
  for (const auto& f : filter_order) {
    row_of.emplace(f, report.rows.size());
    report.rows.push_back({f, 0.0, 0, false});
  }
  std::vector<double> sums(report.rows.size(), 0.0);
  for (const auto& pair : pairs) {
    auto it = row_of.find(pair.filter_id);
    if (it == row_of.end()) {
      if (!filter_order.empty()) throw DomainError("filter '" + pair.filter_id + "' is not in the filter order");
      it = row_of.emplace(pair.filter_id, report.rows.size()).first;
      report.rows.push_back({pair.filter_id, 0.0, 0, false});
      sums.push_back(0.0);
    }
    sums[it->second] += pair_distance(pair.baseline, pair.filtered).d;
    ++report.rows[it->second].n_pairs;
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    if (row.n_pairs == 0) throw DomainError("filter '" + row.filter_id + "' has no baseline/filtered pairs");
    row.mean_d = sums[i] / static_cast<double>(row.n_pairs);
    row.breaking = row.mean_d > threshold;
  }
  return report;
}

}  // namespace ffsense::metrics
