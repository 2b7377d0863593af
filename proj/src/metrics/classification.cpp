#include <algorithm>
#include <map>
#include <set>

#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::metrics {

bool ClassificationReport::zero_division() const {
  return std::any_of(per_class.begin(), per_class.end(),
                     [](const ClassStats& c) { return c.precision_zero_division || c.recall_zero_division; });
}

ClassificationReport classification_report(std::span<const std::string> actual, std::span<const std::string> predicted,
                                           Averaging averaging, std::span<const std::string> classes) {
  if (actual.size() != predicted.size())
    throw DomainError("classification_report: " + std::to_string(actual.size()) + " actual vs " +
                      std::to_string(predicted.size()) + " predicted labels");
  if (actual.empty()) throw DomainError("classification_report: empty input");

  std::vector<std::string> labels;
  if (classes.empty()) {
    std::set<std::string> u(actual.begin(), actual.end());
    u.insert(predicted.begin(), predicted.end());
    labels.assign(u.begin(), u.end());
  } else {
    labels.assign(classes.begin(), classes.end());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], i);

  std::vector<std::int64_t> tp(labels.size(), 0), pred_count(labels.size(), 0), support(labels.size(), 0);
  ClassificationReport r;
  r.averaging = averaging;
  r.total = static_cast<std::int64_t>(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    auto a = index.find(actual[i]);
    auto p = index.find(predicted[i]);
    if (a == index.end()) throw DomainError("label '" + actual[i] + "' is not in the class list");
    if (p == index.end()) throw DomainError("label '" + predicted[i] + "' is not in the class list");
    ++support[a->second];
    ++pred_count[p->second];
    if (a->second == p->second) {
      ++tp[a->second];
      ++r.correct;
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);

  double wsum = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    ClassStats s;
    s.label = labels[k];
    s.support = support[k];
    s.precision_zero_division = pred_count[k] == 0;
    s.recall_zero_division = support[k] == 0;
    s.precision = pred_count[k] ? static_cast<double>(tp[k]) / static_cast<double>(pred_count[k]) : 0.0;
    s.recall = support[k] ? static_cast<double>(tp[k]) / static_cast<double>(support[k]) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    const double w = averaging == Averaging::macro ? 1.0 : static_cast<double>(s.support);
    r.precision += w * s.precision;
    r.recall += w * s.recall;
    r.f1 += w * s.f1;
    wsum += w;
    r.per_class.push_back(std::move(s));
  }
  if (wsum > 0.0) {
    r.precision /= wsum;
    r.recall /= wsum;
    r.f1 /= wsum;
  }
  return r;
}

}  // namespace ffsense::metrics
