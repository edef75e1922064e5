#pragma once

#include <cstdint>
#include <vector>

#include "pvids/ids/tree.hpp"

namespace pvids::ids {

struct ForestParams {
  std::size_t trees = 100;
  TreeParams tree{100, 12, 3, 3};
  bool bootstrap = true;
};

struct ForestModel {
  std::vector<Tree> trees;

  /// Fraction of trees whose leaf majority is attack.
  double score(const double* x) const {
    std::size_t votes = 0;
    for (const auto& t : trees) votes += t.predict(x) >= 0.5 ? 1 : 0;
    return static_cast<double>(votes) / static_cast<double>(trees.size());
  }
};

/// Random forest of Gini trees on bootstrap resamples. Tree i draws from its own stream, so the
/// result does not depend on the number of workers.
inline ForestModel fit_forest(const Samples& s, const ForestParams& p, std::uint64_t seed, unsigned workers = 0) {
  check_trainable(s);
  if (p.trees == 0) throw ValidationError{"a forest needs at least one tree"};
  std::vector<double> t(s.y.begin(), s.y.end());
  auto mean_label = [&](const std::uint32_t* r, std::size_t n) {
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) a += t[r[i]];
    return a / static_cast<double>(n);
  };
  ForestModel m;
  m.trees.resize(p.trees);
  parallel_for(
      p.trees,
      [&](std::size_t k) {
        auto rng = derive_rng(seed, k, "forest-tree");
        std::vector<std::uint32_t> rows(s.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          rows[i] = p.bootstrap ? static_cast<std::uint32_t>(uniform01(rng) * static_cast<double>(s.size()))
                                : static_cast<std::uint32_t>(i);
        m.trees[k] = grow_tree(s, t, std::move(rows), p.tree, rng, mean_label);
      },
      workers);
  return m;
}

}  // namespace pvids::ids
