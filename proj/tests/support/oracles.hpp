#pragma once

// Brute-force reference implementations used to cross-check the metrics
// module. They favour the most literal reading of each formula over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct ClassScores {
  double precision = 0, recall = 0, f1 = 0;
  std::int64_t support = 0;
};

struct Classification {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  std::map<std::string, ClassScores> per_class;
};

inline Classification classification(const std::vector<std::string>& actual, const std::vector<std::string>& predicted,
                                     bool weighted, std::vector<std::string> classes = {}) {
  if (classes.empty()) {
    std::set<std::string> u(actual.begin(), actual.end());
    u.insert(predicted.begin(), predicted.end());
    classes.assign(u.begin(), u.end());
  }
  Classification out;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) correct += actual[i] == predicted[i];
  out.accuracy = actual.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(actual.size());
  double wsum = 0;
  for (const auto& c : classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const bool a = actual[i] == c, p = predicted[i] == c;
      if (a && p) ++tp;
      if (!a && p) ++fp;
      if (a && !p) ++fn;
    }
    ClassScores s;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.support = tp + fn;
    out.per_class[c] = s;
    const double w = weighted ? static_cast<double>(s.support) : 1.0;
    out.precision += w * s.precision;
    out.recall += w * s.recall;
    out.f1 += w * s.f1;
    wsum += w;
  }
  if (wsum > 0) {
    out.precision /= wsum;
    out.recall /= wsum;
    out.f1 /= wsum;
  }
  return out;
}

struct Regression {
  double r2 = 0, mae = 0, mse = 0;
};

inline Regression regression(const std::vector<double>& a, const std::vector<double>& p) {
  Regression out;
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (double v : a) mean += v;
  mean /= n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.mae += std::fabs(a[i] - p[i]);
    out.mse += (a[i] - p[i]) * (a[i] - p[i]);
    ss_res += (a[i] - p[i]) * (a[i] - p[i]);
    ss_tot += (a[i] - mean) * (a[i] - mean);
  }
  out.mae /= n;
  out.mse /= n;
  out.r2 = 1.0 - ss_res / ss_tot;
  return out;
}

inline std::vector<std::vector<std::int64_t>> confusion(const std::vector<std::string>& actual,
                                                        const std::vector<std::string>& predicted,
                                                        const std::vector<std::string>& classes) {
  std::vector<std::vector<std::int64_t>> m(classes.size(), std::vector<std::int64_t>(classes.size(), 0));
  for (std::size_t r = 0; r < classes.size(); ++r)
    for (std::size_t c = 0; c < classes.size(); ++c)
      for (std::size_t i = 0; i < actual.size(); ++i)
        if (actual[i] == classes[r] && predicted[i] == classes[c]) ++m[r][c];
  return m;
}

// Wrongly predicted as each class: count of instances with predicted == c and actual != c.
inline std::map<std::string, std::int64_t> wrongly_predicted_as(const std::vector<std::string>& actual,
                                                                const std::vector<std::string>& predicted) {
  std::map<std::string, std::int64_t> out;
  for (std::size_t i = 0; i < actual.size(); ++i)
    if (actual[i] != predicted[i]) ++out[predicted[i]];
  return out;
}

inline double distance(const std::vector<double>& p, const std::vector<double>& q) {
  double np = 0, nq = 0;
  for (double v : p) np += v * v;
  for (double v : q) nq += v * v;
  np = std::sqrt(np);
  nq = std::sqrt(nq);
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] / np - q[i] / nq;
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace oracle
