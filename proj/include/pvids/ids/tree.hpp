#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "pvids/common.hpp"
#include "pvids/ids/samples.hpp"

namespace pvids::ids {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1, right = -1;
  double value = 0.0;
  std::uint32_t n = 0;  // training rows (with multiplicity) that reached the node
  int depth = 0;

  bool leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double* x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(i)];
      i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  int depth() const {
    int d = 0;
    for (const auto& nd : nodes) d = std::max(d, nd.depth);
    return d;
  }
};

struct TreeParams {
  int max_depth = 100;
  std::uint32_t min_samples_split = 2;
  std::uint32_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 means every feature
};

/// Grows a CART tree on `rows` (indices into `s`, repeats allowed) against real targets `t` by
/// squared-error reduction. On 0/1 targets this ranks splits exactly as Gini does, since both
/// impurities are proportional to p(1 - p). Each split draws features in random order and stops
/// after `max_features` non-constant ones. `leaf_value` maps a leaf's rows to its output.
inline Tree grow_tree(const Samples& s, const std::vector<double>& t, std::vector<std::uint32_t> rows,
                      const TreeParams& p, Rng& rng,
                      const std::function<double(const std::uint32_t*, std::size_t)>& leaf_value) {
  const std::size_t d = s.dim;
  const std::size_t mtry = p.max_features == 0 ? d : std::min(p.max_features, d);
  Tree tree;
  struct Pending {
    std::size_t node, begin, end;
  };
  std::vector<Pending> stack;
  tree.nodes.push_back({});
  tree.nodes[0].depth = 0;
  stack.push_back({0, 0, rows.size()});

  std::vector<std::pair<double, std::uint32_t>> buf;
  std::vector<std::size_t> features(d);
  while (!stack.empty()) {
    const auto [id, begin, end] = stack.back();
    stack.pop_back();
    const std::size_t n = end - begin;
    auto* r = rows.data() + begin;
    {
      auto& nd = tree.nodes[id];
      nd.n = static_cast<std::uint32_t>(n);
      nd.value = leaf_value(r, n);
    }
    const int depth = tree.nodes[id].depth;

    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += t[r[i]];
      sq += t[r[i]] * t[r[i]];
    }
    const double parent_sse = sq - sum * sum / static_cast<double>(n);
    if (depth >= p.max_depth || n < p.min_samples_split || n < 2 * std::size_t{p.min_samples_leaf} ||
        parent_sse <= 1e-12 * std::max(1.0, sq))
      continue;

    std::iota(features.begin(), features.end(), 0);
    shuffle(features, rng);
    int best_feature = -1;
    double best_gain = 0.0, best_threshold = 0.0;
    std::size_t visited = 0;
    for (std::size_t fi = 0; fi < d && visited < mtry; ++fi) {
      const auto f = features[fi];
      buf.resize(n);
      for (std::size_t i = 0; i < n; ++i) buf[i] = {s.at(r[i], f), r[i]};
      std::sort(buf.begin(), buf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (buf.front().first == buf.back().first) continue;  // constant here; does not count
      ++visited;
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += t[buf[i].second];
        if (buf[i].first == buf[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < p.min_samples_leaf || nr < p.min_samples_leaf) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - sum * sum / static_cast<double>(n);
        if (gain > best_gain + 1e-12 * std::max(1.0, sq)) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = buf[i].first + (buf[i + 1].first - buf[i].first) / 2.0;
          if (best_threshold >= buf[i + 1].first) best_threshold = buf[i].first;  // adjacent doubles
        }
      }
    }
    if (best_feature < 0) continue;

    auto* mid = std::partition(r, r + n, [&](std::uint32_t i) { return s.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold; });
    const auto split = begin + static_cast<std::size_t>(mid - r);
    const auto left = tree.nodes.size();
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    tree.nodes[left].depth = tree.nodes[left + 1].depth = depth + 1;
    auto& nd = tree.nodes[id];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = static_cast<int>(left);
    nd.right = static_cast<int>(left + 1);
    stack.push_back({left + 1, split, end});
    stack.push_back({left, begin, split});
  }
  return tree;
}

}  // namespace pvids::ids
