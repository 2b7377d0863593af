#include <gtest/gtest.h>

#include <cmath>

#include "ffsense/dataset/manifest.hpp"
#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"
#include "ffsense/random.hpp"
#include "oracles.hpp"

using namespace ffsense;
using namespace ffsense::metrics;

namespace {

std::vector<std::string> random_labels(Rng& rng, std::size_t n, const std::vector<std::string>& pool) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng.below(pool.size())]);
  return out;
}

}  // namespace

TEST(Classification, PerfectPredictionScoresOne) {
  std::vector<std::string> y{"a", "b", "a", "c"};
  auto r = classification_report(y, y);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_FALSE(r.zero_division());
}

TEST(Classification, TwoByTwoHandWorked) {
  std::vector<std::string> a{"m", "m", "f", "f"}, p{"m", "f", "f", "m"};
  auto r = classification_report(a, p);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  auto m = confusion(a, p, std::vector<std::string>{"m", "f"});
  EXPECT_EQ(m.counts, (std::vector<std::vector<std::int64_t>>{{1, 1}, {1, 1}}));
}

TEST(Classification, NeverPredictedClassIsFlagged) {
  std::vector<std::string> a{"x", "y", "y"}, p{"y", "y", "y"};
  auto r = classification_report(a, p);
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_EQ(r.per_class[0].label, "x");
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 0.0);
  EXPECT_TRUE(r.per_class[0].precision_zero_division);
  EXPECT_TRUE(r.zero_division());
  EXPECT_FALSE(std::isnan(r.f1));
}

TEST(Classification, RejectsLengthMismatchAndEmpty) {
  std::vector<std::string> a{"x"}, p{"x", "y"}, none;
  EXPECT_THROW(classification_report(a, p), DomainError);
  EXPECT_THROW(classification_report(none, none), DomainError);
}

TEST(Classification, MatchesOracleOnRandomInputs) {
  Rng rng(11);
  const std::vector<std::string> pool{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.below(40);
    auto a = random_labels(rng, n, pool), p = random_labels(rng, n, pool);
    const bool weighted = trial % 2;
    auto r = classification_report(a, p, weighted ? Averaging::weighted : Averaging::macro);
    auto o = oracle::classification(a, p, weighted);
    ASSERT_NEAR(r.accuracy, o.accuracy, 1e-12);
    ASSERT_NEAR(r.precision, o.precision, 1e-12);
    ASSERT_NEAR(r.recall, o.recall, 1e-12);
    ASSERT_NEAR(r.f1, o.f1, 1e-12);
    // accuracy = trace / total on the same inputs
    std::vector<std::string> classes;
    for (const auto& c : r.per_class) classes.push_back(c.label);
    auto m = confusion(a, p, classes);
    ASSERT_DOUBLE_EQ(r.accuracy, static_cast<double>(m.trace()) / static_cast<double>(m.total()));
    for (const auto& c : r.per_class) {
      ASSERT_GE(c.precision, 0.0);
      ASSERT_LE(c.precision, 1.0);
      ASSERT_GE(c.f1, 0.0);
      ASSERT_LE(c.f1, 1.0);
    }
  }
}

TEST(Regression, HandWorkedExample) {
  std::vector<double> a{20, 30, 40}, p{22, 29, 40};
  auto r = regression_report(a, p);
  EXPECT_DOUBLE_EQ(r.mae, 1.0);
  EXPECT_DOUBLE_EQ(r.mse, 5.0 / 3.0);
  EXPECT_NEAR(r.r2, 1.0 - 5.0 / 200.0, 1e-12);
}

TEST(Regression, ConstantActualHasNoR2) {
  std::vector<double> a{30, 30, 30}, p{29, 30, 31};
  EXPECT_THROW(regression_report(a, p), DomainError);
  EXPECT_DOUBLE_EQ(mean_absolute_error(a, p), 2.0 / 3.0);
}

TEST(Regression, MatchesOracleAndOrdering) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 2 + rng.below(30);
    std::vector<double> a, p;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(rng.uniform(1, 80));
      p.push_back(rng.uniform(1, 80));
    }
    auto r = regression_report(a, p);
    auto o = oracle::regression(a, p);
    ASSERT_NEAR(r.mae, o.mae, 1e-9 * std::max(1.0, o.mae));
    ASSERT_NEAR(r.mse, o.mse, 1e-9 * std::max(1.0, o.mse));
    ASSERT_NEAR(r.r2, o.r2, 1e-9 * std::max(1.0, std::fabs(o.r2)));
    ASSERT_LE(r.mae * r.mae, r.mse * (1 + 1e-12));
  }
}

TEST(Distortion, NormalizeAndDistance) {
  std::vector<double> v{3, 4};
  auto n = l2_normalize(v);
  EXPECT_DOUBLE_EQ(n[0], 0.6);
  EXPECT_DOUBLE_EQ(n[1], 0.8);
  std::vector<double> e0{1, 0}, e1{0, 1};
  EXPECT_NEAR(pair_distance(e0, e1).d, std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(pair_distance(v, v).d, 0.0);
  std::vector<double> zero{0, 0};
  EXPECT_THROW(l2_normalize(zero), DomainError);
  std::vector<double> three{1, 0, 0};
  EXPECT_THROW(pair_distance(e0, three), DomainError);
}

TEST(Distortion, ScaleInvariantAndBounded) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 2 + rng.below(20);
    std::vector<double> p(n), q(n);
    for (auto& x : p) x = rng.uniform();
    for (auto& x : q) x = rng.uniform();
    const double d = pair_distance(p, q).d;
    ASSERT_NEAR(d, oracle::distance(p, q), 1e-12);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, std::sqrt(2.0) + 1e-12);
    auto scaled = p;
    const double k = rng.uniform(0.01, 100.0);
    for (auto& x : scaled) x *= k;
    ASSERT_NEAR(pair_distance(scaled, q).d, d, 1e-9);
  }
}

TEST(Distortion, FilterMeansAndThreshold) {
  std::vector<double> e0{1, 0}, e1{0, 1}, mix{1, 1};
  std::vector<DistortionPair> pairs{{e0, e0, "a"}, {e0, e1, "a"}, {e0, mix, "b"}};
  auto r = filter_distortion(pairs);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_NEAR(r.rows[0].mean_d, std::sqrt(2.0) / 2, 1e-12);
  EXPECT_FALSE(r.rows[0].breaking);
  EXPECT_NEAR(r.rows[1].mean_d, std::sqrt(2.0 - std::sqrt(2.0)), 1e-12);
  EXPECT_EQ(r.rows[1].n_pairs, 1);

  std::vector<std::string> order{"b", "a"};
  auto ordered = filter_distortion(pairs, 0.7, order);
  EXPECT_EQ(ordered.rows[0].filter_id, "b");
  EXPECT_TRUE(ordered.rows[0].breaking);

  std::vector<std::string> extra{"a", "b", "c"};
  EXPECT_THROW(filter_distortion(pairs, 0.75, extra), DomainError);
}

TEST(AgeDeviation, SignsCountsAndMassBalance) {
  std::vector<AgeSample> s{{30, 27, "f"}, {40, 41, "f"}, {25, 25, "f"}, {50, 44, "f"}};
  auto r = age_deviation(s);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  EXPECT_EQ(row.n_under, 2);
  EXPECT_EQ(row.n_over, 1);
  EXPECT_EQ(row.n_exact, 1);
  EXPECT_DOUBLE_EQ(row.avg_reduction, -4.5);
  EXPECT_DOUBLE_EQ(row.avg_increment, 1.0);
  EXPECT_DOUBLE_EQ(row.net_deviation, -8.0 / 3.0);
}

TEST(AgeDeviation, AllExactIsUndefinedAndEmptyIsError) {
  std::vector<AgeSample> s{{30, 30, "f"}};
  auto r = age_deviation(s);
  EXPECT_FALSE(r.rows[0].defined);
  EXPECT_DOUBLE_EQ(r.rows[0].avg_reduction, 0.0);
  std::vector<std::string> order{"f", "g"};
  EXPECT_THROW(age_deviation(s, order), DomainError);
}

TEST(AgeDeviation, MassBalanceOnRandomSamples) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<AgeSample> s;
    const auto n = 1 + rng.below(50);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 18 + static_cast<double>(rng.below(50));
      s.push_back({a, rng.below(4) == 0 ? a : a + rng.uniform(-6, 6), rng.below(2) ? "x" : "y"});
    }
    for (const auto& row : age_deviation(s).rows) {
      const double n1 = static_cast<double>(row.n_under), n2 = static_cast<double>(row.n_over);
      ASSERT_NEAR(n1 * row.avg_reduction + n2 * row.avg_increment, (n1 + n2) * row.net_deviation, 1e-9);
      ASSERT_LE(row.avg_reduction, 0.0);
      ASSERT_GE(row.avg_increment, 0.0);
    }
  }
}

TEST(Confusion, RejectsUnknownLabels) {
  std::vector<std::string> a{"male"}, p{"other"};
  try {
    confusion(a, p, dataset::gender_classes());
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("other"), std::string::npos);
  }
}

TEST(Mispredictions, MatchOracleAndConfusionMarginals) {
  Rng rng(29);
  for (int trial = 0; trial < 500; ++trial) {
    const bool gender = trial % 2 == 0;
    const auto& classes = gender ? dataset::gender_classes() : dataset::ethnicity_classes();
    std::vector<FilterLabels> per;
    for (int f = 0; f < 3; ++f) {
      const auto n = 1 + rng.below(30);
      per.push_back({"f" + std::to_string(f), random_labels(rng, n, classes), random_labels(rng, n, classes)});
    }
    auto t = misprediction_tables(per, gender ? Task::gender : Task::ethnicity);
    ASSERT_EQ(t.rows.size(), per.size());
    for (std::size_t f = 0; f < per.size(); ++f) {
      const auto& row = t.rows[f];
      auto m = oracle::confusion(per[f].actual, per[f].predicted, classes);
      ASSERT_EQ(row.confusion.counts, m);
      std::int64_t off = 0;
      for (std::size_t a = 0; a < classes.size(); ++a)
        for (std::size_t p = 0; p < classes.size(); ++p)
          if (a != p) off += m[a][p];
      ASSERT_EQ(row.total_errors(), off);
      if (gender) {
        ASSERT_EQ(row.count("male->female"), m[0][1]);
        ASSERT_EQ(row.count("female->male"), m[1][0]);
      } else {
        auto wrong = oracle::wrongly_predicted_as(per[f].actual, per[f].predicted);
        for (const auto& c : classes) ASSERT_EQ(row.count(c), wrong[c]);
      }
    }
  }
}
