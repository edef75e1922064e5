#pragma once

#include <complex>
#include <ostream>
#include <vector>

#include "pvids/grid.hpp"

namespace pvids {

/// Net complex power injected at each bus (generation positive, load negative), indexed by bus id - 1.
struct InjectionSet {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;

  explicit InjectionSet(std::size_t n = 0) : p_kw(n, 0.0), q_kvar(n, 0.0) {}

  void add(int bus_id, double p, double q) {
    p_kw.at(static_cast<std::size_t>(bus_id - 1)) += p;
    q_kvar.at(static_cast<std::size_t>(bus_id - 1)) += q;
  }
  std::size_t size() const { return p_kw.size(); }
};

struct SolverConfig {
  double tol = 1e-8;  // max |dV| between sweeps, pu
  int max_iter = 100;
};

enum class SolveStatus { converged, not_converged, voltage_collapse };

struct PowerFlowSolution {
  std::vector<double> v_pu;       // per bus
  std::vector<double> angle_rad;  // per bus
  std::vector<double> p_flow_kw;  // per branch (index into model branches), sending end; 0 when open
  std::vector<double> q_flow_kvar;
  double slack_p_kw = 0.0;
  double slack_q_kvar = 0.0;
  double total_loss_p_kw = 0.0;
  double total_loss_q_kvar = 0.0;
  SolveStatus status = SolveStatus::not_converged;
  int iterations = 0;

  bool converged() const { return status == SolveStatus::converged; }
  double v(int bus_id) const { return v_pu.at(static_cast<std::size_t>(bus_id - 1)); }
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::not_converged: return "not_converged";
    case SolveStatus::voltage_collapse: return "voltage_collapse";
  }
  return "?";
}

/// Ladder-iterative (backward/forward sweep) AC power flow with constant-power injections.
/// Bus 1 is held at 1.0 pu, angle 0. Never throws on numerical trouble; inspect `status`.
inline PowerFlowSolution solve(const NetworkModel& model, const InjectionSet& inj, const SolverConfig& cfg = {}) {
  using cd = std::complex<double>;
  const std::size_t n = model.num_buses();
  if (inj.size() != n) throw ValidationError{"injection set does not cover every bus"};
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ValidationError{"solver tolerance and iteration cap must be positive"};

  const double sbase = model.base_kva();
  const double zbase = model.base_ohm();
  const auto& order = model.radial_order();

  std::vector<cd> s_inj(n);
  for (std::size_t i = 0; i < n; ++i) s_inj[i] = cd{inj.p_kw[i], inj.q_kvar[i]} / sbase;
  std::vector<cd> z(order.size());
  for (std::size_t e = 0; e < order.size(); ++e) {
    const auto& br = model.branches()[order[e].branch];
    z[e] = cd{br.r_ohm, br.x_ohm} / zbase;
  }

  std::vector<cd> v(n, cd{1.0, 0.0});
  std::vector<cd> acc(n);        // current drawn by each bus's subtree
  std::vector<cd> j(order.size());  // branch currents, parent -> child

  PowerFlowSolution sol;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    sol.iterations = it;
    for (std::size_t i = 0; i < n; ++i) acc[i] = -std::conj(s_inj[i] / v[i]);
    for (std::size_t e = order.size(); e-- > 0;) {
      const auto c = static_cast<std::size_t>(order[e].child_bus - 1);
      const auto p = static_cast<std::size_t>(order[e].parent_bus - 1);
      j[e] = acc[c];
      acc[p] += acc[c];
    }
    double dv = 0.0;
    for (std::size_t e = 0; e < order.size(); ++e) {
      const auto c = static_cast<std::size_t>(order[e].child_bus - 1);
      const auto p = static_cast<std::size_t>(order[e].parent_bus - 1);
      const cd next = v[p] - z[e] * j[e];
      dv = std::max(dv, std::abs(next - v[c]));
      v[c] = next;
    }
    bool collapsed = false;
    for (const auto& vi : v) collapsed = collapsed || std::abs(vi) < 0.5 || !std::isfinite(std::abs(vi));
    if (collapsed) {
      sol.status = SolveStatus::voltage_collapse;
      break;
    }
    if (dv < cfg.tol) {
      sol.status = SolveStatus::converged;
      break;
    }
  }

  // Currents consistent with the final voltages.
  for (std::size_t i = 0; i < n; ++i) acc[i] = -std::conj(s_inj[i] / v[i]);
  for (std::size_t e = order.size(); e-- > 0;) {
    const auto c = static_cast<std::size_t>(order[e].child_bus - 1);
    const auto p = static_cast<std::size_t>(order[e].parent_bus - 1);
    j[e] = acc[c];
    acc[p] += acc[c];
  }

  sol.v_pu.resize(n);
  sol.angle_rad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.v_pu[i] = std::abs(v[i]);
    sol.angle_rad[i] = std::arg(v[i]);
  }
  sol.p_flow_kw.assign(model.branches().size(), 0.0);
  sol.q_flow_kvar.assign(model.branches().size(), 0.0);
  cd loss{0.0, 0.0};
  for (std::size_t e = 0; e < order.size(); ++e) {
    const auto p = static_cast<std::size_t>(order[e].parent_bus - 1);
    const cd s_send = v[p] * std::conj(j[e]) * sbase;
    sol.p_flow_kw[order[e].branch] = s_send.real();
    sol.q_flow_kvar[order[e].branch] = s_send.imag();
    loss += z[e] * std::norm(j[e]);
  }
  // Substation supplies the root subtree plus its own load.
  const cd s_slack = v[0] * std::conj(acc[0]) * sbase;
  sol.slack_p_kw = s_slack.real();
  sol.slack_q_kvar = s_slack.imag();
  sol.total_loss_p_kw = loss.real() * sbase;
  sol.total_loss_q_kvar = loss.imag() * sbase;
  return sol;
}

inline void write_solution_csv(std::ostream& os, const PowerFlowSolution& sol) {
  os << "bus,v_pu,angle_rad\n";
  for (std::size_t i = 0; i < sol.v_pu.size(); ++i)
    os << i + 1 << ',' << fmt6(sol.v_pu[i]) << ',' << fmt6(sol.angle_rad[i]) << '\n';
}

}  // namespace pvids
