#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pvids/common.hpp"
#include "pvids/telemetry.hpp"

namespace pvids::ids {

/// Dense row-major design matrix with binary labels (1 = attack).
struct Samples {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * dim; }
  double at(std::size_t i, std::size_t j) const { return x[i * dim + j]; }

  void push(const double* r, int label) {
    x.insert(x.end(), r, r + dim);
    y.push_back(label);
  }
};

inline Samples from_table(const FeatureTable& t) {
  Samples s;
  s.dim = FeatureVector::kCount;
  s.x.reserve(t.size() * s.dim);
  for (std::size_t i = 0; i < t.size(); ++i) s.push(t.x[i].data(), t.y[i]);
  return s;
}

inline Samples subset(const Samples& s, const std::vector<std::size_t>& idx) {
  Samples out;
  out.dim = s.dim;
  out.x.reserve(idx.size() * s.dim);
  for (auto i : idx) out.push(s.row(i), s.y.at(i));
  return out;
}

/// Training preconditions shared by every algorithm.
inline void check_trainable(const Samples& s) {
  if (s.size() == 0 || s.dim == 0) throw ValidationError{"training set is empty"};
  bool pos = false, neg = false;
  for (int v : s.y) {
    if (v != 0 && v != 1) throw ValidationError{"labels must be 0 or 1"};
    (v ? pos : neg) = true;
  }
  if (!(pos && neg)) throw ValidationError{"training set holds a single class"};
  for (double v : s.x)
    if (!std::isfinite(v)) throw ValidationError{"training features must be finite"};
}

/// Per-feature z-scoring fitted on training rows only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<std::string> warnings;

  static Standardizer fit(const Samples& s) {
    Standardizer z;
    const auto n = static_cast<double>(s.size());
    z.mean.assign(s.dim, 0.0);
    z.stdev.assign(s.dim, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.dim; ++j) z.mean[j] += s.at(i, j);
    for (auto& m : z.mean) m /= n;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.dim; ++j) {
        const double d = s.at(i, j) - z.mean[j];
        z.stdev[j] += d * d;
      }
    for (std::size_t j = 0; j < s.dim; ++j) {
      z.stdev[j] = std::sqrt(z.stdev[j] / n);
      if (!(z.stdev[j] > 0.0)) {
        z.stdev[j] = 1.0;
        z.warnings.push_back("feature " + std::to_string(j) + " is constant; its scale is left at 1");
      }
    }
    return z;
  }

  void apply(const double* in, double* out) const {
    for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (in[j] - mean[j]) / stdev[j];
  }

  Samples transform(const Samples& s) const {
    if (s.dim != mean.size()) throw ValidationError{"feature count does not match the fitted standardizer"};
    Samples out = s;
    for (std::size_t i = 0; i < s.size(); ++i) apply(s.row(i), out.x.data() + i * s.dim);
    return out;
  }
};

}  // namespace pvids::ids
