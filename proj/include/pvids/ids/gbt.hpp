#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pvids/ids/tree.hpp"

namespace pvids::ids {

struct BoostingParams {
  std::size_t estimators = 1750;
  double learning_rate = 0.01;
  TreeParams tree{4, 2, 1, 0};  // max_features 0 is resolved to floor(sqrt(d)) at fit time
  std::uint64_t seed = 10;
};

struct BoostingModel {
  double init = 0.0;  // prior log-odds
  double learning_rate = 0.01;
  std::vector<Tree> trees;

  double raw(const double* x) const {
    double f = init;
    for (const auto& t : trees) f += learning_rate * t.predict(x);
    return f;
  }
  double score(const double* x) const { return 1.0 / (1.0 + std::exp(-raw(x))); }
};

/// Gradient boosting on binomial deviance. Each stage fits a squared-error tree to the residuals
/// y - p and sets every leaf to the Newton step sum(y - p) / sum(p (1 - p)).
inline BoostingModel fit_boosting(const Samples& s, BoostingParams p) {
  check_trainable(s);
  if (p.tree.max_features == 0)
    p.tree.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(s.dim))));
  const std::size_t n = s.size();
  const double pos = static_cast<double>(std::accumulate(s.y.begin(), s.y.end(), 0));
  BoostingModel m;
  m.learning_rate = p.learning_rate;
  m.init = std::log(pos / (static_cast<double>(n) - pos));

  std::vector<double> f(n, m.init), resid(n), hess(n);
  auto newton = [&](const std::uint32_t* r, std::size_t k) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      num += resid[r[i]];
      den += hess[r[i]];
    }
    return den > 1e-150 ? num / den : 0.0;
  };
  auto rng = derive_rng(p.seed, 0, "boosting");
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  for (std::size_t stage = 0; stage < p.estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-f[i]));
      resid[i] = s.y[i] - prob;
      hess[i] = prob * (1.0 - prob);
    }
    m.trees.push_back(grow_tree(s, resid, all, p.tree, rng, newton));
    const auto& tree = m.trees.back();
    for (std::size_t i = 0; i < n; ++i) f[i] += p.learning_rate * tree.predict(s.row(i));
  }
  return m;
}

}  // namespace pvids::ids
