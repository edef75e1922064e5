#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pvids/ids/samples.hpp"

namespace pvids::ids {

struct KnnParams {
  std::size_t k = 2;
  double p = 2.0;  // Minkowski exponent
};

struct KnnModel {
  KnnParams params;
  Samples store;  // standardized training rows

  double distance(const double* a, const double* b) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < store.dim; ++j) {
      const double d = std::abs(a[j] - b[j]);
      acc += params.p == 2.0 ? d * d : std::pow(d, params.p);
    }
    return acc;  // monotone in the true distance; the root is never needed
  }

  /// Indices of the k nearest stored rows, closest first; equal distances favour the lower index.
  std::vector<std::size_t> neighbours(const double* x) const {
    const std::size_t k = std::min(params.k, store.size());
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(k + 1);
    for (std::size_t i = 0; i < store.size(); ++i) {
      const double d = distance(x, store.row(i));
      if (best.size() == k && !(d < best.back().first)) continue;
      auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(d, i));
      best.insert(pos, {d, i});
      if (best.size() > k) best.pop_back();
    }
    std::vector<std::size_t> out;
    for (const auto& b : best) out.push_back(b.second);
    return out;
  }

  /// Fraction of neighbours labelled attack. An even split is resolved by the nearest neighbour:
  /// the score stays at 0.5 when it is an attack and drops just below 0.5 otherwise.
  double score(const double* x) const {
    const auto nb = neighbours(x);
    std::size_t votes = 0;
    for (auto i : nb) votes += store.y[i] ? 1 : 0;
    const double s = static_cast<double>(votes) / static_cast<double>(nb.size());
    if (2 * votes == nb.size() && !store.y[nb.front()]) return std::nextafter(0.5, 0.0);
    return s;
  }
};

inline KnnModel fit_knn(const Samples& s, const KnnParams& p = {}) {
  check_trainable(s);
  if (p.k < 1) throw ValidationError{"k must be at least 1"};
  if (!(p.p >= 1.0)) throw ValidationError{"Minkowski exponent must be >= 1"};
  return {p, s};
}

}  // namespace pvids::ids
