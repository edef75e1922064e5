#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "pvids/common.hpp"

namespace pvids::ids {

struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double auc = 0.0, pr_auc = 0.0, jaccard = 0.0;
  bool precision_undefined = false;  // no positive predictions; precision reported as 0
};

inline constexpr double kDecisionThreshold = 0.5;

/// Fills the count-derived metrics. Ratios with a zero denominator are reported as 0.
inline void fill_from_counts(EvalReport& r) {
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  const double tp = static_cast<double>(r.tp), fp = static_cast<double>(r.fp);
  const double tn = static_cast<double>(r.tn), fn = static_cast<double>(r.fn);
  r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  r.precision_undefined = r.tp + r.fp == 0;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  r.jaccard = ratio(tp, tp + fp + fn);
}

/// ROC and precision-recall areas by the trapezoid rule, sweeping every distinct score as a
/// threshold (tied scores move together). The PR curve starts at (recall 0, precision 1).
inline std::pair<double, double> ranking_areas(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = static_cast<double>(labels.size()) - pos;

  double tp = 0.0, fp = 0.0;
  double roc = 0.0, pr = 0.0;
  double prev_tpr = 0.0, prev_fpr = 0.0, prev_recall = 0.0, prev_precision = 1.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? tp : fp) += 1.0;
    const double tpr = pos > 0.0 ? tp / pos : 0.0;
    const double fpr = neg > 0.0 ? fp / neg : 0.0;
    const double precision = tp / (tp + fp);
    roc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    pr += (tpr - prev_recall) * (precision + prev_precision) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
    prev_recall = tpr;
    prev_precision = precision;
  }
  // Single-class inputs have no defined ranking; report chance.
  if (pos == 0.0 || neg == 0.0) roc = 0.5;
  return {roc, pr};
}

/// Scores are attack probabilities; a row is predicted attack iff score >= 0.5.
inline EvalReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty()) throw ValidationError{"cannot evaluate an empty prediction set"};
  if (scores.size() != labels.size()) throw ValidationError{"score and label counts differ"};
  EvalReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError{"labels must be 0 or 1"};
    const bool predicted = scores[i] >= kDecisionThreshold;
    if (predicted) (labels[i] ? r.tp : r.fp) += 1;
    else (labels[i] ? r.fn : r.tn) += 1;
  }
  fill_from_counts(r);
  std::tie(r.auc, r.pr_auc) = ranking_areas(scores, labels);
  return r;
}

}  // namespace pvids::ids
