#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pvids/powerflow.hpp"

namespace pvids {

// Sign convention used throughout: positive q is reactive power injected into the
// grid (capacitive / leading); negative q is absorbed (inductive / lagging).

enum class PvMode { ConstantPF, MaxP, VoltVar };

inline std::string to_string(PvMode m) {
  switch (m) {
    case PvMode::ConstantPF: return "pf";
    case PvMode::MaxP: return "maxp";
    case PvMode::VoltVar: return "voltvar";
  }
  return "?";
}

inline PvMode parse_pv_mode(const std::string& s) {
  if (s == "pf" || s == "ConstantPF") return PvMode::ConstantPF;
  if (s == "maxp" || s == "MaxP") return PvMode::MaxP;
  if (s == "voltvar" || s == "VoltVar") return PvMode::VoltVar;
  throw ParseError{"unknown PV mode '" + s + "'"};
}

/// Piecewise-linear volt-var characteristic. Reactive output is a fraction of s_rated:
/// q1 at and below v1, zero across the deadband [v2, v3], q4 at and above v4.
struct VoltVarCurve {
  double v1 = 0.92, q1 = 0.44;
  double v2 = 0.98, v3 = 1.02;
  double v4 = 1.08, q4 = -0.44;

  static VoltVarCurve rule21() { return {}; }

  bool valid() const { return v1 < v2 && v2 <= v3 && v3 < v4 && v1 > 0.0; }
  bool normal() const { return q1 >= 0.0 && q4 <= 0.0; }

  VoltVarCurve inverted() const {
    auto c = *this;
    c.q1 = -q1;
    c.q4 = -q4;
    return c;
  }

  double fraction(double v) const {
    if (v <= v1) return q1;
    if (v < v2) return q1 * (v2 - v) / (v2 - v1);
    if (v <= v3) return 0.0;
    if (v < v4) return q4 * (v - v3) / (v4 - v3);
    return q4;
  }

  friend bool operator==(const VoltVarCurve&, const VoltVarCurve&) = default;
};

struct PvUnit {
  int bus_id = 0;
  double p_rated = 0.0;  // kW
  double s_rated = 0.0;  // kVA
  PvMode mode = PvMode::MaxP;
  double pf = 1.0;       // signed: > 0 leading (injecting), < 0 lagging (absorbing)
  double p_limit = 0.0;  // kW, MaxP mode
  VoltVarCurve curve{};

  void validate() const {
    if (!(p_rated > 0.0) || p_rated > s_rated)
      throw ValidationError{"PV at bus " + std::to_string(bus_id) + ": need 0 < p_rated <= s_rated"};
    if (p_limit > p_rated + 1e-9 || p_limit < 0.0)
      throw ValidationError{"PV at bus " + std::to_string(bus_id) + ": p_limit must be within [0, p_rated]"};
    if (pf == 0.0 || std::abs(pf) > 1.0)
      throw ValidationError{"PV at bus " + std::to_string(bus_id) + ": power factor must satisfy 0 < |pf| <= 1"};
    if (!curve.valid()) throw ValidationError{"PV at bus " + std::to_string(bus_id) + ": volt-var anchors out of order"};
  }

  friend bool operator==(const PvUnit&, const PvUnit&) = default;
};

struct PvOutput {
  double p = 0.0;  // kW
  double q = 0.0;  // kvar

  friend bool operator==(const PvOutput&, const PvOutput&) = default;
};

/// Clips (p, q) onto the apparent-power circle, keeping active power first.
inline PvOutput clip_to_capability(PvOutput out, double s_rated) {
  out.p = std::clamp(out.p, 0.0, s_rated);
  const double q_room = std::sqrt(std::max(0.0, s_rated * s_rated - out.p * out.p));
  out.q = std::clamp(out.q, -q_room, q_room);
  return out;
}

inline PvOutput output_max_p(double p_available, double p_limit) {
  if (p_available < 0.0) throw ValidationError{"available PV power must be non-negative"};
  return {std::min(p_available, p_limit), 0.0};
}

inline PvOutput output_constant_pf(double p_available, double pf, double s_rated) {
  if (p_available < 0.0) throw ValidationError{"available PV power must be non-negative"};
  if (pf == 0.0 || std::abs(pf) > 1.0) throw ValidationError{"power factor must satisfy 0 < |pf| <= 1"};
  const double ratio = std::sqrt(1.0 - pf * pf) / std::abs(pf);  // tan(acos|pf|)
  const double p = std::min(p_available, s_rated);
  return clip_to_capability({p, std::copysign(ratio * p, pf)}, s_rated);
}

inline double voltvar_q(const VoltVarCurve& curve, double v, double s_rated, double p) {
  const PvOutput out = clip_to_capability({p, s_rated * curve.fraction(v)}, s_rated);
  return out.q;
}

/// Output of one unit at its present terminal voltage (voltage only matters in VoltVar mode).
inline PvOutput pv_output(const PvUnit& pv, double p_available, double v_pu) {
  switch (pv.mode) {
    case PvMode::MaxP: return output_max_p(p_available, pv.p_limit);
    case PvMode::ConstantPF: return output_constant_pf(p_available, pv.pf, pv.s_rated);
    case PvMode::VoltVar: {
      const double p = std::min(p_available, pv.s_rated);
      return {p, voltvar_q(pv.curve, v_pu, pv.s_rated, p)};
    }
  }
  return {};
}

struct OuterLoopConfig {
  double tol_q = 0.01;  // kvar
  int max_outer = 100;
  double damping = 0.5;
};

struct VoltVarResult {
  PowerFlowSolution solution;
  std::vector<PvOutput> outputs;  // per PV, same order as the input list
  int outer_iterations = 0;
  bool converged = false;       // inner and outer loops both converged
  double max_residual = 0.0;    // max |q - curve(V)| over volt-var units, kvar
};

/// Power flow with PV injections added to `base_inj`. Volt-var units are resolved by damped
/// successive substitution, q <- (1 - a) q + a curve(V), until every unit is within tol_q.
/// The step is halved whenever the worst residual grows, which tames steep curve segments
/// without moving the fixed point.
inline VoltVarResult solve_with_voltvar(const NetworkModel& model, const InjectionSet& base_inj,
                                        const std::vector<PvUnit>& pvs, const std::vector<double>& p_available,
                                        const SolverConfig& cfg = {}, const OuterLoopConfig& outer = {}) {
  if (pvs.size() != p_available.size()) throw ValidationError{"one availability value per PV is required"};
  if (!(outer.damping > 0.0 && outer.damping <= 1.0)) throw ValidationError{"damping must be in (0, 1]"};
  if (!(outer.tol_q > 0.0) || outer.max_outer < 1) throw ValidationError{"outer-loop tolerance and cap must be positive"};

  VoltVarResult res;
  res.outputs.resize(pvs.size());
  bool any_voltvar = false;
  for (std::size_t k = 0; k < pvs.size(); ++k) {
    res.outputs[k] = pv_output(pvs[k], p_available[k], 1.0);
    if (pvs[k].mode == PvMode::VoltVar) {
      any_voltvar = true;
      res.outputs[k].q = 0.0;
    }
  }

  auto solve_at = [&](const std::vector<PvOutput>& outs) {
    InjectionSet inj = base_inj;
    for (std::size_t k = 0; k < pvs.size(); ++k) inj.add(pvs[k].bus_id, outs[k].p, outs[k].q);
    return solve(model, inj, cfg);
  };

  double alpha = outer.damping;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= outer.max_outer; ++it) {
    res.outer_iterations = it;
    res.solution = solve_at(res.outputs);
    if (!res.solution.converged()) return res;
    if (!any_voltvar) {
      res.converged = true;
      return res;
    }
    double worst = 0.0;
    std::vector<double> target(pvs.size(), 0.0);
    for (std::size_t k = 0; k < pvs.size(); ++k) {
      if (pvs[k].mode != PvMode::VoltVar) continue;
      target[k] = voltvar_q(pvs[k].curve, res.solution.v(pvs[k].bus_id), pvs[k].s_rated, res.outputs[k].p);
      worst = std::max(worst, std::abs(target[k] - res.outputs[k].q));
    }
    res.max_residual = worst;
    if (worst <= outer.tol_q) {
      res.converged = true;
      return res;
    }
    if (worst > previous) alpha = std::max(alpha * 0.5, 1.0 / 64.0);
    previous = worst;
    for (std::size_t k = 0; k < pvs.size(); ++k)
      if (pvs[k].mode == PvMode::VoltVar) res.outputs[k].q = (1.0 - alpha) * res.outputs[k].q + alpha * target[k];
  }
  return res;  // best iterate, flagged unconverged
}

inline constexpr std::string_view kPvConfigHeader = "bus,p_rated_kw,mode,pf,p_limit_kw,v1,q1,v2,v3,v4,q4";

/// Reads the PV configuration CSV. Blank fields take defaults: pf 1, p_limit = p_rated,
/// curve = Rule 21 default. s_rated = oversize * p_rated.
inline std::vector<PvUnit> read_pv_config(const std::string& path, double oversize = 1.0) {
  std::vector<PvUnit> out;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, kPvConfigHeader)) {
    const auto where = path + ":" + std::to_string(++line);
    auto num = [&](std::size_t i, double dflt) { return row[i].empty() ? dflt : csv::to_double(row[i], where); };
    PvUnit u;
    u.bus_id = static_cast<int>(csv::to_int(row[0], where));
    u.p_rated = csv::to_double(row[1], where);
    u.s_rated = oversize * u.p_rated;
    try {
      u.mode = parse_pv_mode(row[2]);
    } catch (const ParseError& e) {
      throw ParseError{where + ": " + e.what()};
    }
    u.pf = num(3, 1.0);
    u.p_limit = num(4, u.p_rated);
    const VoltVarCurve d{};
    u.curve = {num(5, d.v1), num(6, d.q1), num(7, d.v2), num(8, d.v3), num(9, d.v4), num(10, d.q4)};
    try {
      u.validate();
    } catch (const ValidationError& e) {
      throw ValidationError{where + ": " + e.what()};
    }
    out.push_back(u);
  }
  return out;
}

inline void write_pv_config(std::ostream& os, const std::vector<PvUnit>& pvs) {
  os << kPvConfigHeader << '\n';
  for (const auto& u : pvs) {
    os << u.bus_id << ',' << fmt_exact(u.p_rated) << ',' << to_string(u.mode) << ',' << fmt_exact(u.pf) << ','
       << fmt_exact(u.p_limit) << ',' << fmt_exact(u.curve.v1) << ',' << fmt_exact(u.curve.q1) << ','
       << fmt_exact(u.curve.v2) << ',' << fmt_exact(u.curve.v3) << ',' << fmt_exact(u.curve.v4) << ','
       << fmt_exact(u.curve.q4) << '\n';
  }
}

}  // namespace pvids
