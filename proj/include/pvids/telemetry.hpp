#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pvids/attack.hpp"
#include "pvids/profiles.hpp"

namespace pvids {

inline constexpr const char* kGeneratorVersion = "pvids-gen/1";

enum class Label { normal = 0, attack = 1 };

/// Reported telemetry for one minute. Load vectors follow the network's load-bus order.
struct MeasurementSnapshot {
  long timestamp = 0;
  std::vector<double> load_p, load_q;
  std::vector<bool> missing;  // per load bus; p and q are missing together
  std::vector<double> pv_p, pv_q;
  double p_gen = 0.0, q_gen = 0.0;
  Label label = Label::normal;
  std::optional<AttackSpec> attack;
};

/// Physical ground truth behind a snapshot; never visible to a detector.
struct FrameTruth {
  std::vector<PvOutput> pv_actual;
  std::vector<PvOutput> pv_counterfactual;  // no-attack outputs for the same inputs
  double slack_p = 0.0, slack_q = 0.0;
  double cf_slack_p = 0.0, cf_slack_q = 0.0;
  double loss_p = 0.0, cf_loss_p = 0.0;
  double voltvar_residual = 0.0;  // worst |q - curve(V)| over volt-var PVs (attacked physics)
  double cf_voltvar_residual = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

struct SimulatedFrame {
  MeasurementSnapshot snapshot;
  FrameTruth truth;
};

struct FeatureVector {
  double p_d = 0.0, q_d = 0.0, p_gen = 0.0, q_gen = 0.0, dp = 0.0, dq = 0.0;
  Label label = Label::normal;

  static constexpr std::size_t kCount = 6;
  std::array<double, kCount> values() const { return {p_d, q_d, p_gen, q_gen, dp, dq}; }
};

struct PhysicsConfig {
  SolverConfig solver{};
  OuterLoopConfig outer{};
  // MaxP units are dispatched at their available power each minute, so a curtailment attack
  // scales the live operating point. When false the setpoint stays at the configured p_limit.
  bool maxp_tracks_available = true;
};

/// Normal per-frame configuration: with tracking on, every MaxP setpoint equals min(available, rated).
inline std::vector<PvUnit> dispatch(const std::vector<PvUnit>& pvs, const std::vector<double>& p_available,
                                    bool maxp_tracks_available) {
  auto out = pvs;
  if (!maxp_tracks_available) return out;
  for (std::size_t k = 0; k < out.size(); ++k)
    if (out[k].mode == PvMode::MaxP) out[k].p_limit = std::min(out[k].p_rated, p_available.at(k));
  return out;
}

inline InjectionSet load_injections(const NetworkModel& model, const std::vector<int>& load_buses,
                                    const FrameInput& frame) {
  InjectionSet inj(model.num_buses());
  for (std::size_t b = 0; b < load_buses.size(); ++b) inj.add(load_buses[b], -frame.load_p[b], -frame.load_q[b]);
  return inj;
}

/// Runs the frame's physics. With an attack, the grid sees the tampered PVs while the PV bus
/// meters report the counterfactual no-attack outputs. Returns pre-corruption readings.
inline SimulatedFrame simulate_frame(const NetworkModel& model, const std::vector<int>& load_buses,
                                     const std::vector<PvUnit>& pvs, const FrameInput& frame,
                                     const std::optional<AttackSpec>& attack, const PhysicsConfig& cfg = {}) {
  SimulatedFrame out;
  const InjectionSet base = load_injections(model, load_buses, frame);
  const auto units = dispatch(pvs, frame.pv_available, cfg.maxp_tracks_available);
  const auto normal = solve_with_voltvar(model, base, units, frame.pv_available, cfg.solver, cfg.outer);
  auto& truth = out.truth;
  truth.pv_counterfactual = normal.outputs;
  truth.cf_slack_p = normal.solution.slack_p_kw;
  truth.cf_slack_q = normal.solution.slack_q_kvar;
  truth.cf_loss_p = normal.solution.total_loss_p_kw;
  truth.cf_voltvar_residual = normal.max_residual;

  VoltVarResult actual = attack ? solve_with_voltvar(model, base, apply_attack(units, *attack), frame.pv_available,
                                                     cfg.solver, cfg.outer)
                                : normal;
  truth.pv_actual = actual.outputs;
  truth.slack_p = actual.solution.slack_p_kw;
  truth.slack_q = actual.solution.slack_q_kvar;
  truth.loss_p = actual.solution.total_loss_p_kw;
  truth.voltvar_residual = actual.max_residual;
  truth.outer_iterations = actual.outer_iterations;
  truth.converged = normal.converged && actual.converged;

  auto& s = out.snapshot;
  s.timestamp = frame.timestamp;
  s.load_p = frame.load_p;  // constant-power loads: what the meter sees is the demand
  s.load_q = frame.load_q;
  s.missing.assign(load_buses.size(), false);
  const auto reported = attack ? spoof_pv_readings(truth.pv_counterfactual) : truth.pv_actual;
  for (const auto& o : reported) {
    s.pv_p.push_back(o.p);
    s.pv_q.push_back(o.q);
  }
  s.p_gen = truth.slack_p;
  s.q_gen = truth.slack_q;
  s.label = attack ? Label::attack : Label::normal;
  s.attack = attack;
  return out;
}

inline constexpr double kMeterError = 0.01;

/// Multiplicative meter error, uniform in [-rel, +rel] (1% by default).
inline double apply_meter_error(double value, Rng& rng, double rel = kMeterError) {
  return value * (1.0 + uniform(rng, -rel, rel));
}

/// Applies independent meter error to every reading, honest and spoofed alike.
inline void apply_meter_errors(MeasurementSnapshot& s, Rng& rng, double rel = kMeterError) {
  for (std::size_t b = 0; b < s.load_p.size(); ++b) {
    s.load_p[b] = apply_meter_error(s.load_p[b], rng, rel);
    s.load_q[b] = apply_meter_error(s.load_q[b], rng, rel);
  }
  for (std::size_t k = 0; k < s.pv_p.size(); ++k) {
    s.pv_p[k] = apply_meter_error(s.pv_p[k], rng, rel);
    s.pv_q[k] = apply_meter_error(s.pv_q[k], rng, rel);
  }
  s.p_gen = apply_meter_error(s.p_gen, rng, rel);
  s.q_gen = apply_meter_error(s.q_gen, rng, rel);
}

/// With probability `frame_prob`, flags k in [1, floor(max_bus_frac * n)] distinct load buses as missing.
/// Returns the number of buses flagged.
inline std::size_t inject_missing(MeasurementSnapshot& s, Rng& rng, double frame_prob = 0.2,
                                  double max_bus_frac = 0.1) {
  if (frame_prob < 0.0 || frame_prob > 1.0 || max_bus_frac < 0.0 || max_bus_frac > 1.0)
    throw ValidationError{"missing-data probabilities must lie in [0, 1]"};
  const std::size_t n = s.load_p.size();
  if (s.missing.size() != n) s.missing.assign(n, false);
  const auto kmax = static_cast<int>(std::floor(max_bus_frac * static_cast<double>(n) + 1e-9));
  if (kmax < 1 || !(uniform01(rng) < frame_prob)) return 0;
  const int k = uniform_int(rng, 1, kmax);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx, rng);
  for (int i = 0; i < k; ++i) s.missing[idx[static_cast<std::size_t>(i)]] = true;
  return static_cast<std::size_t>(k);
}

/// Rounds every reading to the 1e-6 grid used on disk, so features recomputed from a
/// persisted snapshot match the persisted features exactly.
inline double quantize6(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

inline void quantize(MeasurementSnapshot& s) {
  for (auto& v : s.load_p) v = quantize6(v);
  for (auto& v : s.load_q) v = quantize6(v);
  for (auto& v : s.pv_p) v = quantize6(v);
  for (auto& v : s.pv_q) v = quantize6(v);
  s.p_gen = quantize6(s.p_gen);
  s.q_gen = quantize6(s.q_gen);
}

/// Six aggregate features. Missing load readings count as zero; PV bus readings are not used.
inline FeatureVector extract_features(const MeasurementSnapshot& s) {
  FeatureVector f;
  for (std::size_t b = 0; b < s.load_p.size(); ++b) {
    if (!s.missing.empty() && s.missing[b]) continue;
    f.p_d += s.load_p[b];
    f.q_d += s.load_q[b];
  }
  f.p_gen = s.p_gen;
  f.q_gen = s.q_gen;
  f.dp = f.p_gen - f.p_d;
  f.dq = f.q_gen - f.q_d;
  f.label = s.label;
  return f;
}

/// Reported generation minus reported consumption (missing readings count as zero).
inline double apparent_loss(const MeasurementSnapshot& s) {
  double loss = s.p_gen;
  for (double p : s.pv_p) loss += p;
  for (std::size_t b = 0; b < s.load_p.size(); ++b)
    if (s.missing.empty() || !s.missing[b]) loss -= s.load_p[b];
  return loss;
}


// ---------------------------------------------------------------------------
// Datasets

struct DatasetConfig {
  SettingId setting = SettingId::S1;
  std::uint64_t seed = 1;
  bool missing = false;
  double attack_fraction = 0.2;
  double meter_error = kMeterError;
  double missing_frame_prob = 0.2;
  double missing_bus_frac = 0.1;
  double pv_oversize = 1.0;
  VoltVarCurve curve = VoltVarCurve::rule21();
  CurveEnvelope envelope{};
  ProfileConfig profile{};
  std::string profile_source = "synthetic";  // or a directory with loads.csv / pv.csv
  PhysicsConfig physics{};
  double max_drop_fraction = 0.01;
  unsigned workers = 0;
};

struct DatasetMeta {
  DatasetConfig config;
  std::size_t frame_count = 0;
  std::size_t attack_count = 0;
  std::size_t missing_count = 0;
  std::size_t overlap_count = 0;  // frames both attacked and missing data
  std::size_t dropped = 0;
  double load_scale = 1.0;
  std::vector<HouseAssignment> houses;
  std::string generator = kGeneratorVersion;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<MeasurementSnapshot> snapshots;  // finalized (error, missingness, quantization applied)
  std::vector<FrameTruth> truth;
  std::vector<FeatureVector> features;
  std::vector<int> load_buses;
  std::vector<std::string> warnings;
};

/// Frame indices carrying attacks: exactly round(fraction * n), sampled without replacement.
inline std::vector<bool> select_attack_frames(std::size_t n, double fraction, std::uint64_t seed) {
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto rng = derive_rng(seed, 0, "attack-select");
  shuffle(idx, rng);
  std::vector<bool> chosen(n, false);
  for (std::size_t i = 0; i < count && i < n; ++i) chosen[idx[i]] = true;
  return chosen;
}

inline std::vector<FrameInput> load_profile_source(const DatasetConfig& cfg, const std::vector<int>& load_buses,
                                                   const std::vector<PvPlacement>& placements, DatasetMeta& meta,
                                                   std::vector<std::string>& warnings) {
  if (cfg.profile_source == "synthetic") {
    std::vector<double> ratings;
    for (const auto& p : placements) ratings.push_back(p.p_rated_kw);
    auto prof = synth_profiles(load_buses, ratings, cfg.seed, cfg.profile);
    meta.houses = std::move(prof.houses);
    meta.load_scale = prof.load_scale;
    return std::move(prof.frames);
  }
  const std::filesystem::path dir{cfg.profile_source};
  auto imp = import_profiles((dir / "loads.csv").string(), (dir / "pv.csv").string(), load_buses, placements.size(),
                             cfg.profile.cap_kw, cfg.profile.cap_kvar);
  meta.load_scale = imp.load_scale;
  warnings.insert(warnings.end(), imp.warnings.begin(), imp.warnings.end());
  return std::move(imp.frames);
}

/// Simulates every frame, labels exactly `attack_fraction` of them as attacked, corrupts readings,
/// and extracts features. Deterministic in the config (including seed) regardless of worker count.
inline Dataset generate_dataset(const NetworkModel& model, const std::vector<PvPlacement>& placements,
                                const DatasetConfig& cfg) {
  Dataset ds;
  ds.meta.config = cfg;
  ds.load_buses = model.bus_ids_of(BusKind::load);
  const auto pvs = make_setting(cfg.setting, placements, cfg.pv_oversize, cfg.curve);
  const auto frames = load_profile_source(cfg, ds.load_buses, placements, ds.meta, ds.warnings);
  const std::size_t n = frames.size();
  const auto attacked = select_attack_frames(n, cfg.attack_fraction, cfg.seed);

  std::vector<SimulatedFrame> sims(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        std::optional<AttackSpec> spec;
        if (attacked[i]) {
          auto rng = derive_rng(cfg.seed, i, "attack");
          spec = sample_attack(pvs, rng, cfg.envelope);
        }
        sims[i] = simulate_frame(model, ds.load_buses, pvs, frames[i], spec, cfg.physics);
        auto meter = derive_rng(cfg.seed, i, "meter");
        apply_meter_errors(sims[i].snapshot, meter, cfg.meter_error);
        if (cfg.missing) {
          auto rng = derive_rng(cfg.seed, i, "missing");
          inject_missing(sims[i].snapshot, rng, cfg.missing_frame_prob, cfg.missing_bus_frac);
        }
        quantize(sims[i].snapshot);
      },
      cfg.workers);

  for (std::size_t i = 0; i < n; ++i) {
    if (!sims[i].truth.converged) {
      ++ds.meta.dropped;
      ds.warnings.push_back("frame " + std::to_string(i) + " dropped: power flow did not converge");
      continue;
    }
    const bool has_missing =
        std::any_of(sims[i].snapshot.missing.begin(), sims[i].snapshot.missing.end(), [](bool b) { return b; });
    ds.meta.attack_count += attacked[i] ? 1 : 0;
    ds.meta.missing_count += has_missing ? 1 : 0;
    ds.meta.overlap_count += (has_missing && attacked[i]) ? 1 : 0;
    ds.features.push_back(extract_features(sims[i].snapshot));
    ds.snapshots.push_back(std::move(sims[i].snapshot));
    ds.truth.push_back(std::move(sims[i].truth));
  }
  ds.meta.frame_count = ds.snapshots.size();
  if (n > 0 && static_cast<double>(ds.meta.dropped) > cfg.max_drop_fraction * static_cast<double>(n))
    throw SolverError{std::to_string(ds.meta.dropped) + " of " + std::to_string(n) +
                      " frames failed to converge (limit " + fmt6(cfg.max_drop_fraction * 100.0) + "%)"};
  return ds;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kFeatureHeader = "timestamp,p_d,q_d,p_gen,q_gen,dp,dq,label";

inline nlohmann::json meta_to_json(const DatasetMeta& m) {
  const auto& c = m.config;
  nlohmann::json houses = nlohmann::json::array();
  for (const auto& h : m.houses) houses.push_back({{"bus", h.bus}, {"types", h.types}});
  return {{"type", "meta"},
          {"generator", m.generator},
          {"seed", c.seed},
          {"setting", to_string(c.setting)},
          {"missing", c.missing},
          {"frame_count", m.frame_count},
          {"attack_fraction", c.attack_fraction},
          {"attack_count", m.attack_count},
          {"meter_error", c.meter_error},
          {"missing_frame_prob", c.missing_frame_prob},
          {"missing_bus_frac", c.missing_bus_frac},
          {"missing_count", m.missing_count},
          {"attack_missing_overlap", m.overlap_count},
          {"dropped", m.dropped},
          {"pv_oversize", c.pv_oversize},
          {"voltvar", to_json(c.curve)},
          {"envelope",
           {{"v_lo", c.envelope.v_lo},
            {"v_hi", c.envelope.v_hi},
            {"q_max", c.envelope.q_max},
            {"min_slope_width", c.envelope.min_slope_width}}},
          {"profile_source", c.profile_source},
          {"days", c.profile.days},
          {"minutes_per_day", c.profile.minutes_per_day},
          {"start_hour", c.profile.start_hour},
          {"min_houses", c.profile.min_houses},
          {"max_houses", c.profile.max_houses},
          {"peak_fraction", c.profile.peak_fraction},
          {"pv_peak", c.profile.pv_peak},
          {"cloudiness", c.profile.cloudiness},
          {"day_variation", c.profile.day_variation},
          {"spikes", c.profile.spikes},
          {"cap_kw", c.profile.cap_kw},
          {"cap_kvar", c.profile.cap_kvar},
          {"solver_tol", c.physics.solver.tol},
          {"solver_max_iter", c.physics.solver.max_iter},
          {"outer_tol_q", c.physics.outer.tol_q},
          {"outer_max", c.physics.outer.max_outer},
          {"outer_damping", c.physics.outer.damping},
          {"maxp_tracks_available", c.physics.maxp_tracks_available},
          {"load_scale", m.load_scale},
          {"houses", houses}};
}

/// Reconstructs the generating configuration from a meta record.
inline DatasetConfig config_from_meta(const nlohmann::json& j) {
  if (j.at("generator").get<std::string>() != kGeneratorVersion)
    throw ValidationError{"dataset was produced by " + j.at("generator").get<std::string>() + ", this build is " +
                          kGeneratorVersion};
  DatasetConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.setting = parse_setting(j.at("setting").get<std::string>());
  c.missing = j.at("missing").get<bool>();
  c.attack_fraction = j.at("attack_fraction").get<double>();
  c.meter_error = j.at("meter_error").get<double>();
  c.missing_frame_prob = j.at("missing_frame_prob").get<double>();
  c.missing_bus_frac = j.at("missing_bus_frac").get<double>();
  c.pv_oversize = j.at("pv_oversize").get<double>();
  c.curve = curve_from_json(j.at("voltvar"));
  const auto& env = j.at("envelope");
  c.envelope = {env.at("v_lo").get<double>(), env.at("v_hi").get<double>(), env.at("q_max").get<double>(),
                env.at("min_slope_width").get<double>()};
  c.profile_source = j.at("profile_source").get<std::string>();
  c.profile.days = j.at("days").get<int>();
  c.profile.minutes_per_day = j.at("minutes_per_day").get<int>();
  c.profile.start_hour = j.at("start_hour").get<double>();
  c.profile.min_houses = j.at("min_houses").get<int>();
  c.profile.max_houses = j.at("max_houses").get<int>();
  c.profile.peak_fraction = j.at("peak_fraction").get<double>();
  c.profile.pv_peak = j.at("pv_peak").get<double>();
  c.profile.cloudiness = j.at("cloudiness").get<double>();
  c.profile.day_variation = j.at("day_variation").get<double>();
  c.profile.spikes = j.at("spikes").get<double>();
  c.profile.cap_kw = j.at("cap_kw").get<double>();
  c.profile.cap_kvar = j.at("cap_kvar").get<double>();
  c.physics.solver.tol = j.at("solver_tol").get<double>();
  c.physics.solver.max_iter = j.at("solver_max_iter").get<int>();
  c.physics.outer.tol_q = j.at("outer_tol_q").get<double>();
  c.physics.outer.max_outer = j.at("outer_max").get<int>();
  c.physics.outer.damping = j.at("outer_damping").get<double>();
  c.physics.maxp_tracks_available = j.at("maxp_tracks_available").get<bool>();
  return c;
}

inline void write_features_csv(std::ostream& os, const std::vector<MeasurementSnapshot>& snaps,
                               const std::vector<FeatureVector>& feats) {
  os << kFeatureHeader << '\n';
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    os << snaps[i].timestamp << ',' << fmt6(f.p_d) << ',' << fmt6(f.q_d) << ',' << fmt6(f.p_gen) << ','
       << fmt6(f.q_gen) << ',' << fmt6(f.dp) << ',' << fmt6(f.dq) << ',' << static_cast<int>(f.label) << '\n';
  }
}

inline std::string snapshot_header(const std::vector<int>& load_buses, std::size_t num_pvs) {
  std::string h = "timestamp,label,p_gen,q_gen";
  for (std::size_t k = 1; k <= num_pvs; ++k) h += ",pv" + std::to_string(k) + "_p,pv" + std::to_string(k) + "_q";
  for (int b : load_buses) h += ",b" + std::to_string(b) + "_p,b" + std::to_string(b) + "_q";
  return h + ",missing_mask";
}

inline void write_snapshots_csv(std::ostream& os, const std::vector<int>& load_buses,
                                const std::vector<MeasurementSnapshot>& snaps) {
  const std::size_t num_pvs = snaps.empty() ? 4 : snaps.front().pv_p.size();
  os << snapshot_header(load_buses, num_pvs) << '\n';
  for (const auto& s : snaps) {
    os << s.timestamp << ',' << static_cast<int>(s.label) << ',' << fmt6(s.p_gen) << ',' << fmt6(s.q_gen);
    for (std::size_t k = 0; k < s.pv_p.size(); ++k) os << ',' << fmt6(s.pv_p[k]) << ',' << fmt6(s.pv_q[k]);
    std::string mask;
    for (std::size_t b = 0; b < s.load_p.size(); ++b) {
      const bool miss = !s.missing.empty() && s.missing[b];
      mask += miss ? '1' : '0';
      if (miss)
        os << ",,";
      else
        os << ',' << fmt6(s.load_p[b]) << ',' << fmt6(s.load_q[b]);
    }
    os << ',' << mask << '\n';
  }
}

inline void write_truth_csv(std::ostream& os, const std::vector<MeasurementSnapshot>& snaps,
                            const std::vector<FrameTruth>& truth) {
  os << "timestamp,label,slack_p,slack_q,cf_slack_p,cf_slack_q,loss_p,cf_loss_p,voltvar_residual,outer_iterations";
  const std::size_t num_pvs = truth.empty() ? 0 : truth.front().pv_actual.size();
  for (std::size_t k = 1; k <= num_pvs; ++k) os << ",pv" << k << "_p,pv" << k << "_q";
  os << '\n';
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& t = truth[i];
    os << snaps[i].timestamp << ',' << static_cast<int>(snaps[i].label) << ',' << fmt6(t.slack_p) << ','
       << fmt6(t.slack_q) << ',' << fmt6(t.cf_slack_p) << ',' << fmt6(t.cf_slack_q) << ',' << fmt6(t.loss_p) << ','
       << fmt6(t.cf_loss_p) << ',' << fmt6(t.voltvar_residual) << ',' << t.outer_iterations;
    for (const auto& o : t.pv_actual) os << ',' << fmt6(o.p) << ',' << fmt6(o.q);
    os << '\n';
  }
}

inline void write_meta_jsonl(std::ostream& os, const Dataset& ds) {
  os << meta_to_json(ds.meta).dump() << '\n';
  for (std::size_t i = 0; i < ds.snapshots.size(); ++i) {
    const auto& s = ds.snapshots[i];
    if (!s.attack) continue;
    nlohmann::json j{{"type", "attack"}, {"frame", i}, {"timestamp", s.timestamp}, {"tampers", to_json(*s.attack)}};
    os << j.dump() << '\n';
  }
}

/// Writes features.csv, snapshots.csv, truth.csv and meta.jsonl into `dir`.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f{dir / name, std::ios::binary};
    if (!f) throw std::runtime_error{"cannot write " + (dir / name).string()};
    return f;
  };
  {
    auto f = open("features.csv");
    write_features_csv(f, ds.snapshots, ds.features);
  }
  {
    auto f = open("snapshots.csv");
    write_snapshots_csv(f, ds.load_buses, ds.snapshots);
  }
  {
    auto f = open("truth.csv");
    write_truth_csv(f, ds.snapshots, ds.truth);
  }
  {
    auto f = open("meta.jsonl");
    write_meta_jsonl(f, ds);
  }
}

/// Labeled feature rows as persisted on disk.
struct FeatureTable {
  std::vector<long> timestamp;
  std::vector<std::array<double, FeatureVector::kCount>> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

inline FeatureTable read_features_csv(const std::string& path) {
  FeatureTable t;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, kFeatureHeader)) {
    const auto where = path + ":" + std::to_string(++line);
    t.timestamp.push_back(static_cast<long>(csv::to_int(row[0], where)));
    std::array<double, FeatureVector::kCount> x{};
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = csv::to_double(row[c + 1], where);
    t.x.push_back(x);
    const auto y = csv::to_int(row[7], where);
    if (y != 0 && y != 1) throw ParseError{where + ": label must be 0 or 1"};
    t.y.push_back(static_cast<int>(y));
  }
  return t;
}

inline FeatureTable to_table(const Dataset& ds) {
  FeatureTable t;
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    t.timestamp.push_back(ds.snapshots[i].timestamp);
    t.x.push_back(ds.features[i].values());
    t.y.push_back(static_cast<int>(ds.features[i].label));
  }
  return t;
}

/// Parses snapshots.csv back into finalized snapshots (attack specs are not stored there).
inline std::vector<MeasurementSnapshot> read_snapshots_csv(const std::string& path, const std::vector<int>& load_buses,
                                                           std::size_t num_pvs = 4) {
  std::vector<MeasurementSnapshot> out;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, snapshot_header(load_buses, num_pvs))) {
    const auto where = path + ":" + std::to_string(++line);
    MeasurementSnapshot s;
    s.timestamp = static_cast<long>(csv::to_int(row[0], where));
    s.label = csv::to_int(row[1], where) == 1 ? Label::attack : Label::normal;
    s.p_gen = csv::to_double(row[2], where);
    s.q_gen = csv::to_double(row[3], where);
    std::size_t c = 4;
    for (std::size_t k = 0; k < num_pvs; ++k) {
      s.pv_p.push_back(csv::to_double(row[c++], where));
      s.pv_q.push_back(csv::to_double(row[c++], where));
    }
    const auto& mask = row.back();
    if (mask.size() != load_buses.size()) throw ParseError{where + ": missing_mask has the wrong length"};
    for (std::size_t b = 0; b < load_buses.size(); ++b) {
      const bool miss = mask[b] == '1';
      s.missing.push_back(miss);
      s.load_p.push_back(miss ? 0.0 : csv::to_double(row[c], where));
      s.load_q.push_back(miss ? 0.0 : csv::to_double(row[c + 1], where));
      c += 2;
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// First line of meta.jsonl.
inline nlohmann::json read_meta(const std::filesystem::path& dir) {
  std::ifstream in{dir / "meta.jsonl"};
  if (!in) throw ParseError{"cannot open " + (dir / "meta.jsonl").string()};
  std::string line;
  std::getline(in, line);
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError{(dir / "meta.jsonl").string() + ":1: " + e.what()};
  }
}

}  // namespace pvids
