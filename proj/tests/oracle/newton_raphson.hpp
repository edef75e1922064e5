#pragma once

// Test-only reference solver: polar Newton-Raphson on the full bus admittance matrix.
// Shares nothing with the sweep solver beyond the network description. The tolerance is a
// per-unit power mismatch; branch admittances reach 1e4 pu, so much below 1e-10 is noise.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "pvids/grid.hpp"

namespace oracle {

struct NrResult {
  std::vector<double> v_pu;
  std::vector<double> angle_rad;
  double slack_p_kw = 0.0;
  double slack_q_kvar = 0.0;
  double loss_p_kw = 0.0;  // slack plus net injections
  int iterations = 0;
  bool converged = false;
};

inline NrResult newton_raphson(const pvids::NetworkModel& model, const std::vector<double>& p_kw,
                               const std::vector<double>& q_kvar, double tol = 1e-10, int max_iter = 50) {
  using cd = std::complex<double>;
  const auto n = static_cast<Eigen::Index>(model.num_buses());
  const double sbase = model.base_kva();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : model.branches()) {
    if (!br.closed) continue;
    const cd ys = 1.0 / (cd{br.r_ohm, br.x_ohm} / model.base_ohm());
    const auto a = br.from_bus - 1, b = br.to_bus - 1;
    y(a, a) += ys;
    y(b, b) += ys;
    y(a, b) -= ys;
    y(b, a) -= ys;
  }
  Eigen::VectorXcd s_spec(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s_spec(i) = cd{p_kw[static_cast<std::size_t>(i)], q_kvar[static_cast<std::size_t>(i)]} / sbase;

  Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
  const Eigen::Index m = n - 1;  // every bus except the slack is PQ
  NrResult out;
  for (int it = 0; it <= max_iter; ++it) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    const Eigen::VectorXcd ibus = y * v;
    const Eigen::VectorXcd s_calc = v.cwiseProduct(ibus.conjugate());
    Eigen::VectorXd f(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const cd mis = s_calc(i + 1) - s_spec(i + 1);
      f(i) = mis.real();
      f(m + i) = mis.imag();
    }
    out.iterations = it;
    if (f.cwiseAbs().maxCoeff() < tol) {
      out.converged = true;
      break;
    }
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    Eigen::MatrixXcd ds_dva(n, n), ds_dvm(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) {
        const cd unit = v(c) / std::abs(v(c));
        const cd diag_i = r == c ? ibus(r) : cd{0.0, 0.0};
        ds_dva(r, c) = cd{0.0, 1.0} * v(r) * std::conj(diag_i - y(r, c) * v(c));
        ds_dvm(r, c) = v(r) * std::conj(y(r, c) * unit) + (r == c ? std::conj(ibus(r)) * unit : cd{0.0, 0.0});
      }
    Eigen::MatrixXd jac(2 * m, 2 * m);
    jac.topLeftCorner(m, m) = ds_dva.bottomRightCorner(m, m).real();
    jac.topRightCorner(m, m) = ds_dvm.bottomRightCorner(m, m).real();
    jac.bottomLeftCorner(m, m) = ds_dva.bottomRightCorner(m, m).imag();
    jac.bottomRightCorner(m, m) = ds_dvm.bottomRightCorner(m, m).imag();
    const Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
    va.tail(m) += dx.head(m);
    vm.tail(m) += dx.tail(m);
  }
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
  const cd s_slack = v(0) * std::conj((y * v)(0)) * sbase;
  out.slack_p_kw = s_slack.real();
  out.slack_q_kvar = s_slack.imag();
  double net = 0.0;
  for (double p : p_kw) net += p;
  out.loss_p_kw = out.slack_p_kw + net;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.v_pu.push_back(vm(i));
    out.angle_rad.push_back(va(i));
  }
  return out;
}

}  // namespace oracle
