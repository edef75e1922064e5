#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvids/case69.hpp"
#include "pvids/der_control.hpp"

namespace pvids {

enum class SettingId { S1 = 1, S2 = 2, S3 = 3, S4 = 4 };

inline SettingId parse_setting(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "s1" || s == "1") return SettingId::S1;
  if (s == "s2" || s == "2") return SettingId::S2;
  if (s == "s3" || s == "3") return SettingId::S3;
  if (s == "s4" || s == "4") return SettingId::S4;
  throw ValidationError{"unknown setting '" + s + "' (expected s1..s4)"};
}

inline std::string to_string(SettingId s) { return "s" + std::to_string(static_cast<int>(s)); }

/// Normal operating modes per PV for a network setting:
///   S1 all unity-PF, S2 all MaxP, S3 all volt-var, S4 (volt-var, unity-PF, MaxP, volt-var).
inline std::array<PvMode, 4> setting_modes(SettingId s) {
  switch (s) {
    case SettingId::S1: return {PvMode::ConstantPF, PvMode::ConstantPF, PvMode::ConstantPF, PvMode::ConstantPF};
    case SettingId::S2: return {PvMode::MaxP, PvMode::MaxP, PvMode::MaxP, PvMode::MaxP};
    case SettingId::S3: return {PvMode::VoltVar, PvMode::VoltVar, PvMode::VoltVar, PvMode::VoltVar};
    case SettingId::S4: return {PvMode::VoltVar, PvMode::ConstantPF, PvMode::MaxP, PvMode::VoltVar};
  }
  return {};
}

/// Builds the four PV units of a setting in their normal (untampered) configuration.
inline std::vector<PvUnit> make_setting(SettingId s, const std::vector<PvPlacement>& placements,
                                        double oversize = 1.0, const VoltVarCurve& curve = VoltVarCurve::rule21()) {
  if (placements.size() != 4) throw ValidationError{"network settings are defined for exactly 4 PV units"};
  const auto modes = setting_modes(s);
  std::vector<PvUnit> units;
  for (std::size_t k = 0; k < 4; ++k) {
    PvUnit u;
    u.bus_id = placements[k].bus_id;
    u.p_rated = placements[k].p_rated_kw;
    u.s_rated = oversize * u.p_rated;
    u.mode = modes[k];
    u.pf = 1.0;
    u.p_limit = u.p_rated;
    u.curve = curve;
    u.validate();
    units.push_back(u);
  }
  return units;
}

enum class TamperKind { pf_change, maxp_scale, curve_replace };

inline std::string to_string(TamperKind k) {
  switch (k) {
    case TamperKind::pf_change: return "pf_change";
    case TamperKind::maxp_scale: return "maxp_scale";
    case TamperKind::curve_replace: return "curve_replace";
  }
  return "?";
}

inline TamperKind required_tamper(PvMode m) {
  switch (m) {
    case PvMode::ConstantPF: return TamperKind::pf_change;
    case PvMode::MaxP: return TamperKind::maxp_scale;
    case PvMode::VoltVar: return TamperKind::curve_replace;
  }
  return TamperKind::pf_change;
}

struct Tamper {
  std::size_t pv = 0;  // index into the PV list (PV1 is 0)
  TamperKind kind = TamperKind::pf_change;
  double pf = 1.0;     // pf_change: new signed power factor
  double scale = 1.0;  // maxp_scale: p_limit multiplier in [0, 0.8]
  VoltVarCurve curve{};
  bool inverted = false;  // curve_replace: inverted original rather than an arbitrary curve

  friend bool operator==(const Tamper&, const Tamper&) = default;
};

struct AttackSpec {
  std::vector<Tamper> tampers;  // one per target, ascending PV index

  std::vector<std::size_t> targets() const {
    std::vector<std::size_t> t;
    for (const auto& x : tampers) t.push_back(x.pv);
    return t;
  }
  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// Envelope for arbitrary volt-var curves an attacker may write.
struct CurveEnvelope {
  double v_lo = 0.90;
  double v_hi = 1.10;
  double q_max = 0.6;
  double min_slope_width = 0.02;  // pu; minimum width of each sloped segment
};

inline VoltVarCurve random_curve(Rng& rng, const CurveEnvelope& env = {}) {
  std::array<double, 4> v{};
  // Rejection keeps the sloped segments at least min_slope_width wide.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (auto& x : v) x = uniform(rng, env.v_lo, env.v_hi);
    std::sort(v.begin(), v.end());
    if (v[1] - v[0] >= env.min_slope_width && v[3] - v[2] >= env.min_slope_width) break;
  }
  VoltVarCurve c;
  c.v1 = v[0];
  c.v2 = v[1];
  c.v3 = v[2];
  c.v4 = v[3];
  c.q1 = uniform(rng, -env.q_max, env.q_max);
  c.q4 = uniform(rng, -env.q_max, env.q_max);
  if (!c.valid()) {  // coincident draws; measure-zero but keep the invariant
    c.v2 = std::nextafter(c.v1, 2.0);
    c.v4 = std::max(c.v4, std::nextafter(c.v3, 2.0));
  }
  return c;
}

inline constexpr std::array<std::size_t, 3> kTargetCounts{1, 2, 4};
inline constexpr double kAttackPf = 0.8;
inline constexpr double kMaxScale = 0.8;

/// Draws an attack for the given normal-mode PV set. Target count is uniform over {1, 2, 4},
/// then the subset is uniform among subsets of that size; each target gets the tampering
/// that matches its own mode.
inline AttackSpec sample_attack(const std::vector<PvUnit>& normal, Rng& rng, const CurveEnvelope& env = {}) {
  const std::size_t n = normal.size();
  std::size_t count = kTargetCounts[static_cast<std::size_t>(uniform_int(rng, 0, 2))];
  count = std::min(count, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx, rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());

  AttackSpec spec;
  for (auto k : idx) {
    Tamper t;
    t.pv = k;
    t.kind = required_tamper(normal[k].mode);
    switch (t.kind) {
      case TamperKind::pf_change: t.pf = uniform01(rng) < 0.5 ? kAttackPf : -kAttackPf; break;
      case TamperKind::maxp_scale: t.scale = uniform(rng, 0.0, kMaxScale); break;
      case TamperKind::curve_replace:
        t.inverted = uniform01(rng) < 0.5;
        t.curve = t.inverted ? normal[k].curve.inverted() : random_curve(rng, env);
        break;
    }
    spec.tampers.push_back(t);
  }
  return spec;
}

inline void validate_attack(const std::vector<PvUnit>& pvs, const AttackSpec& spec) {
  if (spec.tampers.empty()) throw ValidationError{"attack has no targets"};
  std::vector<bool> seen(pvs.size(), false);
  for (const auto& t : spec.tampers) {
    if (t.pv >= pvs.size()) throw ValidationError{"attack targets unknown PV index " + std::to_string(t.pv)};
    if (seen[t.pv]) throw ValidationError{"attack targets PV" + std::to_string(t.pv + 1) + " twice"};
    seen[t.pv] = true;
    if (t.kind != required_tamper(pvs[t.pv].mode))
      throw ValidationError{"tampering " + to_string(t.kind) + " does not match PV" + std::to_string(t.pv + 1) +
                            " mode " + to_string(pvs[t.pv].mode)};
    if (t.kind == TamperKind::maxp_scale && !(t.scale >= 0.0 && t.scale <= 1.0))
      throw ValidationError{"MaxP scale must lie in [0, 1]"};
    if (t.kind == TamperKind::pf_change && (t.pf == 0.0 || std::abs(t.pf) > 1.0))
      throw ValidationError{"tampered power factor must satisfy 0 < |pf| <= 1"};
    if (t.kind == TamperKind::curve_replace && !t.curve.valid())
      throw ValidationError{"tampered volt-var curve has anchors out of order"};
  }
}

inline std::vector<PvUnit> apply_attack(const std::vector<PvUnit>& pvs, const AttackSpec& spec) {
  validate_attack(pvs, spec);
  auto out = pvs;
  for (const auto& t : spec.tampers) {
    auto& u = out[t.pv];
    switch (t.kind) {
      case TamperKind::pf_change: u.pf = t.pf; break;
      case TamperKind::maxp_scale: u.p_limit = t.scale * u.p_limit; break;
      case TamperKind::curve_replace: u.curve = t.curve; break;
    }
  }
  return out;
}

/// The hidden attacker reports what each compromised PV would have produced without the attack.
inline std::vector<PvOutput> spoof_pv_readings(const std::vector<PvOutput>& counterfactual) { return counterfactual; }

inline nlohmann::json to_json(const VoltVarCurve& c) {
  return {{"v1", c.v1}, {"q1", c.q1}, {"v2", c.v2}, {"v3", c.v3}, {"v4", c.v4}, {"q4", c.q4}};
}

inline VoltVarCurve curve_from_json(const nlohmann::json& j) {
  return {j.at("v1").get<double>(), j.at("q1").get<double>(), j.at("v2").get<double>(),
          j.at("v3").get<double>(), j.at("v4").get<double>(), j.at("q4").get<double>()};
}

inline nlohmann::json to_json(const AttackSpec& spec) {
  auto arr = nlohmann::json::array();
  for (const auto& t : spec.tampers) {
    nlohmann::json j{{"pv", t.pv + 1}, {"kind", to_string(t.kind)}};
    switch (t.kind) {
      case TamperKind::pf_change: j["pf"] = t.pf; break;
      case TamperKind::maxp_scale: j["scale"] = t.scale; break;
      case TamperKind::curve_replace:
        j["inverted"] = t.inverted;
        j["curve"] = to_json(t.curve);
        break;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

inline AttackSpec attack_from_json(const nlohmann::json& arr) {
  AttackSpec spec;
  for (const auto& j : arr) {
    Tamper t;
    t.pv = j.at("pv").get<std::size_t>() - 1;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "pf_change") {
      t.kind = TamperKind::pf_change;
      t.pf = j.at("pf").get<double>();
    } else if (kind == "maxp_scale") {
      t.kind = TamperKind::maxp_scale;
      t.scale = j.at("scale").get<double>();
    } else if (kind == "curve_replace") {
      t.kind = TamperKind::curve_replace;
      t.inverted = j.at("inverted").get<bool>();
      t.curve = curve_from_json(j.at("curve"));
    } else {
      throw ParseError{"unknown tampering kind '" + kind + "'"};
    }
    spec.tampers.push_back(t);
  }
  return spec;
}

}  // namespace pvids
