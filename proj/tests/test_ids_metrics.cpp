#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pvids/ids/metrics.hpp"
#include "pvids/ids/split.hpp"

using namespace pvids;
using namespace pvids::ids;

namespace {

// Scores that produce a given confusion table at the 0.5 threshold.
void build(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn, std::vector<double>& s, std::vector<int>& y) {
  s.clear();
  y.clear();
  for (std::size_t i = 0; i < tp; ++i) s.push_back(0.9), y.push_back(1);
  for (std::size_t i = 0; i < fp; ++i) s.push_back(0.7), y.push_back(0);
  for (std::size_t i = 0; i < tn; ++i) s.push_back(0.1), y.push_back(0);
  for (std::size_t i = 0; i < fn; ++i) s.push_back(0.3), y.push_back(1);
}

// Probability that a random positive outscores a random negative, ties counting half.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  std::vector<double> s;
  std::vector<int> y;
  build(8, 2, 9, 1, s, y);
  const auto r = evaluate(s, y);
  EXPECT_EQ(r.tp, 8u);
  EXPECT_EQ(r.fp, 2u);
  EXPECT_EQ(r.tn, 9u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_DOUBLE_EQ(r.accuracy, 17.0 / 20.0);
  EXPECT_DOUBLE_EQ(r.precision, 0.8);
  EXPECT_DOUBLE_EQ(r.recall, 8.0 / 9.0);
  EXPECT_NEAR(r.f1, 2.0 * 0.8 * (8.0 / 9.0) / (0.8 + 8.0 / 9.0), 1e-12);
  EXPECT_DOUBLE_EQ(r.jaccard, 8.0 / 11.0);
  EXPECT_FALSE(r.precision_undefined);
}

TEST(Metrics, RandomConfusionTablesMatchFormulas) {
  std::mt19937_64 rng{31};
  std::uniform_int_distribution<std::size_t> count{0, 40};
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t tp = count(rng), fp = count(rng), tn = count(rng), fn = count(rng);
    if (tp + fp + tn + fn == 0) tn = 1;
    std::vector<double> s;
    std::vector<int> y;
    build(tp, fp, tn, fn, s, y);
    const auto r = evaluate(s, y);
    ASSERT_EQ(r.tp, tp);
    ASSERT_EQ(r.fp, fp);
    ASSERT_EQ(r.tn, tn);
    ASSERT_EQ(r.fn, fn);
    const double n = double(tp + fp + tn + fn);
    const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double jaccard = tp + fp + fn ? double(tp) / double(tp + fp + fn) : 0.0;
    EXPECT_NEAR(r.accuracy, double(tp + tn) / n, 1e-12);
    EXPECT_NEAR(r.precision, precision, 1e-12);
    EXPECT_NEAR(r.recall, recall, 1e-12);
    EXPECT_NEAR(r.f1, f1, 1e-12);
    EXPECT_NEAR(r.jaccard, jaccard, 1e-12);
    EXPECT_EQ(r.precision_undefined, tp + fp == 0);
    if (tp + fn > 0 && fp + tn > 0) EXPECT_NEAR(r.auc, pairwise_auc(s, y), 1e-12);
  }
}

TEST(Metrics, AucMatchesPairwiseCountOnRandomScores) {
  std::mt19937_64 rng{5};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      y.push_back(i % 3 == 0);
      s.push_back(std::round(u(rng) * 10.0) / 10.0);  // coarse grid forces ties
    }
    EXPECT_NEAR(evaluate(s, y).auc, pairwise_auc(s, y), 1e-12);
  }
}

TEST(Metrics, PerfectAndConstantRankings) {
  const std::vector<int> y{0, 0, 1, 0, 1, 1, 0, 1};
  std::vector<double> perfect;
  for (int v : y) perfect.push_back(v ? 0.8 : 0.2);
  const auto r = evaluate(perfect, y);
  EXPECT_DOUBLE_EQ(r.auc, 1.0);
  EXPECT_DOUBLE_EQ(r.pr_auc, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  const auto c = evaluate(std::vector<double>(y.size(), 0.5), y);
  EXPECT_DOUBLE_EQ(c.auc, 0.5);
}

TEST(Metrics, NoPositivePredictionsFlagsPrecision) {
  const auto r = evaluate({0.1, 0.2, 0.3}, {0, 1, 1});
  EXPECT_TRUE(r.precision_undefined);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(Metrics, ThresholdIsInclusive) {
  const auto r = evaluate({0.5, std::nextafter(0.5, 0.0)}, {1, 0});
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.tn, 1u);
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(evaluate({}, {}), ValidationError);
  EXPECT_THROW(evaluate({0.1}, {0, 1}), ValidationError);
  EXPECT_THROW(evaluate({0.1}, {2}), ValidationError);
}

TEST(Split, HoldoutSizesAndStratification) {
  std::vector<int> y(21600, 0);
  for (std::size_t i = 0; i < y.size(); i += 5) y[i] = 1;
  const auto sp = train_test_split(y, 0.2, 7);
  EXPECT_EQ(sp.train.size(), 17280u);
  EXPECT_EQ(sp.test.size(), 4320u);
  const auto attacks = std::count_if(sp.test.begin(), sp.test.end(), [&](auto i) { return y[i] == 1; });
  EXPECT_EQ(attacks, 864);
  std::vector<std::size_t> all = sp.train;
  all.insert(all.end(), sp.test.begin(), sp.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  EXPECT_TRUE(std::is_sorted(sp.test.begin(), sp.test.end()));
}

TEST(Split, HoldoutIsSeeded) {
  std::vector<int> y(500);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 4 == 0;
  EXPECT_EQ(train_test_split(y, 0.2, 1).test, train_test_split(y, 0.2, 1).test);
  EXPECT_NE(train_test_split(y, 0.2, 1).test, train_test_split(y, 0.2, 2).test);
  EXPECT_THROW(train_test_split(y, 0.0, 1), ValidationError);
  EXPECT_THROW(train_test_split(y, 1.0, 1), ValidationError);
}

TEST(Split, KFoldPartitionsEvenly) {
  std::vector<int> y(100, 0);
  for (std::size_t i = 0; i < 100; i += 5) y[i] = 1;
  const auto folds = stratified_kfold(y, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 20u);
    EXPECT_EQ(f.train.size(), 80u);
    const auto pos = std::count_if(f.test.begin(), f.test.end(), [&](auto i) { return y[i] == 1; });
    EXPECT_NEAR(static_cast<double>(pos), 4.0, 1.0);
    for (auto i : f.test) EXPECT_TRUE(seen.insert(i).second);
    for (auto i : f.test) EXPECT_FALSE(std::binary_search(f.train.begin(), f.train.end(), i));
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Split, KFoldDeterminismAndErrors) {
  std::vector<int> y(30);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0;
  const auto a = stratified_kfold(y, 3, 9), b = stratified_kfold(y, 3, 9);
  for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(a[f].test, b[f].test);
  EXPECT_THROW(stratified_kfold(y, 1, 9), ValidationError);
  EXPECT_THROW(stratified_kfold(std::vector<int>(3, 0), 5, 9), ValidationError);
  EXPECT_THROW(stratified_kfold({0, 0, 0, 0, 0, 1}, 3, 9), ValidationError);
}
