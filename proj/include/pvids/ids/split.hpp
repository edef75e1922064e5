#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pvids/common.hpp"
#include "pvids/ids/samples.hpp"

namespace pvids::ids {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {

inline std::array<std::vector<std::size_t>, 2> by_class(const std::vector<int>& y, Rng& rng) {
  std::array<std::vector<std::size_t>, 2> cls;
  for (std::size_t i = 0; i < y.size(); ++i) cls[static_cast<std::size_t>(y[i] != 0)].push_back(i);
  for (auto& c : cls) shuffle(c, rng);
  return cls;
}

}  // namespace detail

/// Stratified holdout: each class contributes round(test_frac * class size) rows to the test side.
/// Both index lists come back sorted.
inline Split train_test_split(const std::vector<int>& y, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ValidationError{"test fraction must lie in (0, 1)"};
  auto rng = derive_rng(seed, 0, "holdout");
  Split out;
  for (const auto& c : detail::by_class(y, rng)) {
    const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(c.size())));
    out.test.insert(out.test.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), c.begin() + static_cast<std::ptrdiff_t>(n_test), c.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Stratified k-fold assignment: rows of each class are shuffled and dealt round-robin, so every
/// fold's class counts differ by at most one. Fold f is the test side of the f-th split.
inline std::vector<Split> stratified_kfold(const std::vector<int>& y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError{"k-fold needs k >= 2"};
  if (y.size() < k) throw ValidationError{"fewer rows than folds"};
  auto rng = derive_rng(seed, 0, "kfold");
  std::vector<std::size_t> fold(y.size());
  std::size_t offset = 0;
  for (const auto& c : detail::by_class(y, rng)) {
    if (!c.empty() && c.size() < k)
      throw ValidationError{"a class has " + std::to_string(c.size()) + " rows, fewer than the " + std::to_string(k) +
                            " folds"};
    for (std::size_t i = 0; i < c.size(); ++i) fold[c[i]] = (offset + i) % k;
    offset += c.size();  // keeps overall fold sizes balanced as well
  }
  std::vector<Split> out(k);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t f = 0; f < k; ++f) (fold[i] == f ? out[f].test : out[f].train).push_back(i);
  return out;
}

}  // namespace pvids::ids
