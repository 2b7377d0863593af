#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Pure evaluation formulas. Every function is deterministic and keeps no state.
namespace ffsense::metrics {

// ---------------------------------------------------------------------------
// Classification

enum class Averaging { macro, weighted };

struct ClassStats {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;  // number of actual instances
  bool precision_zero_division = false;  // class never predicted; precision reported as 0
  bool recall_zero_division = false;     // class never present; recall reported as 0
};

struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Averaging averaging = Averaging::macro;
  std::vector<ClassStats> per_class;
  std::int64_t total = 0;
  std::int64_t correct = 0;

  bool zero_division() const;
};

// Classes default to the sorted union of actual and predicted labels.
ClassificationReport classification_report(std::span<const std::string> actual, std::span<const std::string> predicted,
                                           Averaging averaging = Averaging::macro,
                                           std::span<const std::string> classes = {});

// ---------------------------------------------------------------------------
// Regression

struct RegressionReport {
  double r2 = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

double mean_absolute_error(std::span<const double> actual, std::span<const double> predicted);
double mean_squared_error(std::span<const double> actual, std::span<const double> predicted);
// Throws DomainError when actual has zero variance (r2 undefined).
RegressionReport regression_report(std::span<const double> actual, std::span<const double> predicted);

// ---------------------------------------------------------------------------
// Identity-distribution distortion

std::vector<double> l2_normalize(std::span<const double> v);

struct DistortionScore {
  double d = 0.0;
};

// Euclidean distance between the L2-normalized vectors.
DistortionScore pair_distance(std::span<const double> p, std::span<const double> q);

inline constexpr double kBreakingThreshold = 0.75;

struct DistortionPair {
  std::span<const double> baseline;
  std::span<const double> filtered;
  std::string filter_id;
};

struct FilterDistortionRow {
  std::string filter_id;
  double mean_d = 0.0;
  std::int64_t n_pairs = 0;
  bool breaking = false;  // mean_d > threshold
};

struct FilterDistortionReport {
  double threshold = kBreakingThreshold;
  std::vector<FilterDistortionRow> rows;
};

// Rows follow filter_order when given (filters without pairs are an error),
// otherwise first appearance in pairs.
FilterDistortionReport filter_distortion(std::span<const DistortionPair> pairs, double threshold = kBreakingThreshold,
                                         std::span<const std::string> filter_order = {});

// ---------------------------------------------------------------------------
// Age deviation

struct AgeSample {
  double actual = 0.0;
  double predicted = 0.0;
  std::string filter_id;
};

// Deviation is predicted - actual, so reductions are negative. Exact
// predictions are excluded; N = n_under + n_over.
struct AgeDeviationRow {
  std::string filter_id;
  bool defined = false;  // false when every prediction was exact (N = 0)
  double avg_reduction = 0.0;
  double avg_increment = 0.0;
  double net_deviation = 0.0;
  std::int64_t n_under = 0;
  std::int64_t n_over = 0;
  std::int64_t n_exact = 0;
};

struct AgeDeviationReport {
  std::vector<AgeDeviationRow> rows;
};

AgeDeviationReport age_deviation(std::span<const AgeSample> samples, std::span<const std::string> filter_order = {});

// ---------------------------------------------------------------------------
// Confusion and misprediction tables

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::int64_t>> counts;  // rows = actual, columns = predicted

  std::int64_t total() const;
  std::int64_t trace() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws DomainError naming any label outside classes.
ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          std::span<const std::string> classes);

enum class Task { gender, ethnicity };
std::string_view to_string(Task task);

struct FilterLabels {
  std::string filter_id;
  std::vector<std::string> actual;
  std::vector<std::string> predicted;
};

struct MispredictionCount {
  std::string descriptor;  // "male->female" for gender, wrongly predicted class for ethnicity
  std::int64_t count = 0;
};

struct MispredictionRow {
  std::string filter_id;
  std::vector<MispredictionCount> counts;
  ConfusionMatrix confusion;

  std::int64_t total_errors() const;
  std::int64_t count(std::string_view descriptor) const;
};

struct MispredictionTable {
  Task task = Task::gender;
  std::vector<std::string> classes;
  std::vector<MispredictionRow> rows;
};

// Gender: directed errors male->female, female->male (off-diagonal cells).
// Ethnicity: per class, instances wrongly predicted as it (off-diagonal column sums).
MispredictionTable misprediction_tables(std::span<const FilterLabels> per_filter, Task task);

}  // namespace ffsense::metrics
