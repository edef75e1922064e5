#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "pvids/ids/samples.hpp"

namespace pvids::ids {

struct MlpParams {
  std::vector<std::size_t> hidden{50, 100, 50};
  double alpha = 1e-4;  // L2 strength
  double learning_rate = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  std::size_t batch = 200;
  int max_iter = 1000;  // epochs
  double tol = 1e-4;  // epoch-loss improvement that counts as progress
  int patience = 2;  // stalled epochs before the step is halved
  double min_learning_rate = 1e-6;  // training stops once the step falls below this
};

/// Fully connected tanh network with one logistic output unit.
struct MlpModel {
  std::vector<Eigen::MatrixXd> w;  // layer l maps width[l] -> width[l + 1]
  std::vector<Eigen::VectorXd> b;
  int epochs = 0;
  double final_loss = 0.0;

  /// Columns of `x` are samples. Returns the activations of every layer, input first.
  std::vector<Eigen::MatrixXd> forward(const Eigen::MatrixXd& x) const {
    std::vector<Eigen::MatrixXd> a{x};
    for (std::size_t l = 0; l < w.size(); ++l) {
      Eigen::MatrixXd z = (w[l] * a.back()).colwise() + b[l];
      if (l + 1 < w.size()) a.push_back(z.array().tanh().matrix());
      else a.push_back((1.0 / (1.0 + (-z.array()).exp())).matrix());
    }
    return a;
  }

  double score(const double* x) const {
    const Eigen::Map<const Eigen::VectorXd> in(x, w.front().cols());
    return forward(Eigen::MatrixXd(in)).back()(0, 0);
  }
};

namespace detail {

inline double clip_prob(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

}  // namespace detail

/// Mean log-loss over the batch plus alpha / (2 B) times the squared weight norm, and its
/// gradient by back-propagation. Gradients are written into gw / gb, shaped like the model.
inline double mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y, double alpha,
                            std::vector<Eigen::MatrixXd>& gw, std::vector<Eigen::VectorXd>& gb) {
  const auto batch = static_cast<double>(x.cols());
  const auto a = m.forward(x);
  const auto& out = a.back();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const double p = detail::clip_prob(out(0, i));
    loss -= y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
  }
  loss /= batch;
  double sq = 0.0;
  for (const auto& wl : m.w) sq += wl.squaredNorm();
  loss += 0.5 * alpha * sq / batch;

  const std::size_t layers = m.w.size();
  gw.resize(layers);
  gb.resize(layers);
  Eigen::MatrixXd delta = (out.row(0) - y) / batch;  // d loss / d z at the logistic output
  for (std::size_t l = layers; l-- > 0;) {
    gw[l] = delta * a[l].transpose() + (alpha / batch) * m.w[l];
    gb[l] = delta.rowwise().sum();
    if (l > 0) delta = ((m.w[l].transpose() * delta).array() * (1.0 - a[l].array().square())).matrix();
  }
  return loss;
}

inline MlpModel init_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<std::size_t> width{inputs};
  width.insert(width.end(), hidden.begin(), hidden.end());
  width.push_back(1);
  MlpModel m;
  for (std::size_t l = 0; l + 1 < width.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(width[l]), fan_out = static_cast<Eigen::Index>(width[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));  // Glorot uniform
    Eigen::MatrixXd wl(fan_out, fan_in);
    Eigen::VectorXd bl(fan_out);
    for (Eigen::Index i = 0; i < wl.size(); ++i) wl.data()[i] = uniform(rng, -bound, bound);
    for (Eigen::Index i = 0; i < bl.size(); ++i) bl[i] = uniform(rng, -bound, bound);
    m.w.push_back(std::move(wl));
    m.b.push_back(std::move(bl));
  }
  return m;
}

/// Minibatch Adam. The step is halved whenever the epoch loss has failed to improve on the best
/// seen by `tol` for `patience` epochs; training ends when the step drops below min_learning_rate
/// or after max_iter epochs.
inline MlpModel fit_mlp(const Samples& s, const MlpParams& p, std::uint64_t seed) {
  check_trainable(s);
  if (p.batch == 0) throw ValidationError{"minibatch size must be positive"};
  auto rng = derive_rng(seed, 0, "mlp");
  MlpModel m = init_mlp(s.dim, p.hidden, rng);

  const std::size_t layers = m.w.size();
  std::vector<Eigen::MatrixXd> mw, vw, gw;
  std::vector<Eigen::VectorXd> mb, vb, gb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw.push_back(Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(Eigen::VectorXd::Zero(m.b[l].size()));
    vb.push_back(mb.back());
  }

  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = p.learning_rate, best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  long step = 0;
  const auto d = static_cast<Eigen::Index>(s.dim);
  for (int epoch = 1; epoch <= p.max_iter; ++epoch) {
    m.epochs = epoch;
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += p.batch) {
      const std::size_t count = std::min(p.batch, order.size() - start);
      Eigen::MatrixXd x(d, static_cast<Eigen::Index>(count));
      Eigen::RowVectorXd y(static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        const auto r = order[start + i];
        for (Eigen::Index j = 0; j < d; ++j) x(j, static_cast<Eigen::Index>(i)) = s.at(r, static_cast<std::size_t>(j));
        y(static_cast<Eigen::Index>(i)) = s.y[r];
      }
      epoch_loss += mlp_loss_grad(m, x, y, p.alpha, gw, gb) * static_cast<double>(count);
      ++step;
      const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
      const double rate = lr * std::sqrt(c2) / c1;
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = p.beta1 * mw[l] + (1.0 - p.beta1) * gw[l];
        vw[l] = p.beta2 * vw[l] + (1.0 - p.beta2) * gw[l].cwiseProduct(gw[l]);
        m.w[l].array() -= rate * mw[l].array() / (vw[l].array().sqrt() + p.epsilon);
        mb[l] = p.beta1 * mb[l] + (1.0 - p.beta1) * gb[l];
        vb[l] = p.beta2 * vb[l] + (1.0 - p.beta2) * gb[l].cwiseProduct(gb[l]);
        m.b[l].array() -= rate * mb[l].array() / (vb[l].array().sqrt() + p.epsilon);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    m.final_loss = epoch_loss;
    if (epoch_loss > best - p.tol) {
      if (++stalled >= p.patience) {
        lr /= 2.0;
        stalled = 0;
        if (lr < p.min_learning_rate) break;
      }
    } else {
      stalled = 0;
    }
    best = std::min(best, epoch_loss);
  }
  return m;
}

}  // namespace pvids::ids
