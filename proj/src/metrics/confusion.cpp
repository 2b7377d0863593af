#include <algorithm>
#include <map>

#include "ffsense/dataset/manifest.hpp"
#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::metrics {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          std::span<const std::string> classes) {
  if (actual.size() != predicted.size()) throw DomainError("confusion: actual/predicted length mismatch");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (!index.emplace(classes[i], i).second) throw DomainError("confusion: duplicate class '" + classes[i] + "'");
  ConfusionMatrix m;
  m.classes.assign(classes.begin(), classes.end());
  m.counts.assign(classes.size(), std::vector<std::int64_t>(classes.size(), 0));
  auto lookup = [&](const std::string& label) {
    auto it = index.find(label);
    if (it == index.end()) throw DomainError("label '" + label + "' is not in the class list");
    return it->second;
  };
  for (std::size_t i = 0; i < actual.size(); ++i) ++m.counts[lookup(actual[i])][lookup(predicted[i])];
  return m;
}

std::string_view to_string(Task task) { return task == Task::gender ? "gender" : "ethnicity"; }

std::int64_t MispredictionRow::total_errors() const {
  std::int64_t t = 0;
  for (const auto& c : counts) t += c.count;
  return t;
}

std::int64_t MispredictionRow::count(std::string_view descriptor) const {
  for (const auto& c : counts)
    if (c.descriptor == descriptor) return c.count;
  throw DomainError("no misprediction column '" + std::string(descriptor) + "'");
}

MispredictionTable misprediction_tables(std::span<const FilterLabels> per_filter, Task task) {
  MispredictionTable table;
  table.task = task;
  table.classes = task == Task::gender ? dataset::gender_classes() : dataset::ethnicity_classes();
  const auto n = table.classes.size();
  for (const auto& f : per_filter) {
    MispredictionRow row;
    row.filter_id = f.filter_id;
    row.confusion = confusion(f.actual, f.predicted, table.classes);
    if (task == Task::gender) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t p = 0; p < n; ++p)
          if (a != p) row.counts.push_back({table.classes[a] + "->" + table.classes[p], row.confusion.counts[a][p]});
    } else {
      for (std::size_t p = 0; p < n; ++p) {
        std::int64_t wrong = 0;
        for (std::size_t a = 0; a < n; ++a)
          if (a != p) wrong += row.confusion.counts[a][p];
        row.counts.push_back({table.classes[p], wrong});
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace ffsense::metrics
