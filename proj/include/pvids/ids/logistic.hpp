#pragma once

#include <cmath>
#include <vector>

#include "pvids/ids/samples.hpp"

namespace pvids::ids {

struct LogisticParams {
  double c = 100.0;  // inverse regularization strength
  int max_iter = 1000;
  double tol = 1e-6;  // on the norm of the proximal-gradient step, scaled by the step size
};

struct LogisticModel {
  std::vector<double> w;
  double b = 0.0;
  int iterations = 0;
  bool converged = false;

  double score(const double* x) const {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  }
};

/// Minimizes mean log-loss + ||w||_1 / (c n) with FISTA and soft-thresholding. The intercept is
/// not penalized. Expects standardized inputs, which bound the Lipschitz constant by (d + 1) / 4.
inline LogisticModel fit_logistic(const Samples& s, const LogisticParams& p = {}) {
  check_trainable(s);
  const std::size_t n = s.size(), d = s.dim;
  double lipschitz = 1.0;  // intercept column
  for (std::size_t j = 0; j < d; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += s.at(i, j) * s.at(i, j);
    lipschitz += sq / static_cast<double>(n);
  }
  const double step = 4.0 / lipschitz;
  const double lambda = 1.0 / (p.c * static_cast<double>(n));

  auto gradient = [&](const std::vector<double>& w, double b, std::vector<double>& gw, double& gb) {
    gw.assign(d, 0.0);
    gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = s.row(i);
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      const double r = 1.0 / (1.0 + std::exp(-z)) - s.y[i];
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * x[j];
      gb += r;
    }
    for (auto& g : gw) g /= static_cast<double>(n);
    gb /= static_cast<double>(n);
  };
  auto shrink = [](double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); };

  LogisticModel m;
  m.w.assign(d, 0.0);
  std::vector<double> yw = m.w, gw;
  double yb = 0.0, gb = 0.0, t = 1.0;
  for (int it = 1; it <= p.max_iter; ++it) {
    m.iterations = it;
    gradient(yw, yb, gw, gb);
    std::vector<double> nw(d);
    for (std::size_t j = 0; j < d; ++j) nw[j] = shrink(yw[j] - step * gw[j], step * lambda);
    const double nb = yb - step * gb;
    double move = (nb - yb) * (nb - yb);
    for (std::size_t j = 0; j < d; ++j) move += (nw[j] - yw[j]) * (nw[j] - yw[j]);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double mom = (t - 1.0) / t_next;
    for (std::size_t j = 0; j < d; ++j) yw[j] = nw[j] + mom * (nw[j] - m.w[j]);
    yb = nb + mom * (nb - m.b);
    m.w = std::move(nw);
    m.b = nb;
    t = t_next;
    if (std::sqrt(move) / step <= p.tol) {
      m.converged = true;
      break;
    }
  }
  return m;
}

}  // namespace pvids::ids
