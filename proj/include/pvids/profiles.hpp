#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pvids/case69.hpp"
#include "pvids/common.hpp"

namespace pvids {

/// Household load power factor (lagging); load q is always derived from p at this PF.
inline constexpr double kLoadPowerFactor = 0.78;
inline const double kLoadQOverP = std::sqrt(1.0 - kLoadPowerFactor * kLoadPowerFactor) / kLoadPowerFactor;

/// Loads and PV availability for one minute. Load vectors follow the order of `load_buses`.
struct FrameInput {
  long timestamp = 0;  // minute index from the start of the profile
  std::vector<double> load_p;  // kW
  std::vector<double> load_q;  // kvar
  std::vector<double> pv_available;  // kW, one per PV

  double total_p() const {
    double s = 0.0;
    for (double v : load_p) s += v;
    return s;
  }
  double total_q() const {
    double s = 0.0;
    for (double v : load_q) s += v;
    return s;
  }
};

struct ProfileConfig {
  int days = 30;
  int minutes_per_day = 720;
  double start_hour = 6.5;     // first minute of the daily window
  int min_houses = 4;
  int max_houses = 10;
  double peak_fraction = 0.9;  // target peak of total demand relative to the binding cap
  double pv_peak = 0.95;       // clear-sky noon output relative to rating
  double cloudiness = 1.0;     // scales cloud attenuation depth; 0 gives clear skies
  double day_variation = 0.04; // std of the per-day household demand factor
  double spikes = 1.0;         // scales appliance spike amplitude; 0 disables spikes
  double cap_kw = case69::kLoadCapKw;
  double cap_kvar = case69::kLoadCapKvar;
};

/// Houses served by one load bus: household archetype (0 = A, 1 = B, 2 = C) per house.
struct HouseAssignment {
  int bus = 0;
  std::vector<int> types;
};

struct SynthesizedProfiles {
  std::vector<FrameInput> frames;
  std::vector<HouseAssignment> houses;
  double load_scale = 1.0;  // global rescale applied to the raw household sum
};

namespace detail {

struct Archetype {
  double floor_kw;
  double morning_kw, morning_h, morning_w;
  double ac_kw, ac_mid_h, ac_ramp_h;  // cooling load ramping up into the afternoon
  double evening_kw, evening_h, evening_w;
  double spike_rate_per_h;
};

// June residential shapes (homes A, B, C): breakfast peak, afternoon cooling, evening ramp.
inline constexpr std::array<Archetype, 3> kArchetypes{{
    {1.60, 0.30, 7.5, 1.0, 1.40, 12.0, 3.0, 0.60, 19.0, 1.5, 1.0},
    {1.80, 0.20, 8.0, 1.5, 1.10, 12.5, 3.5, 0.50, 19.5, 2.0, 0.8},
    {1.40, 0.40, 7.0, 0.8, 1.80, 11.5, 2.5, 0.70, 20.0, 1.5, 1.2},
}};

inline double bump(double t, double centre, double width) {
  const double z = (t - centre) / width;
  return std::exp(-z * z);
}

inline double clear_sky(int minute, int minutes_per_day) {
  const double s = std::sin(M_PI * (minute + 0.5) / minutes_per_day);
  return std::pow(s, 1.3);
}

}  // namespace detail

/// Rescales loads in place so neither network cap is exceeded; returns the factor applied (<= 1).
inline double enforce_caps(std::vector<FrameInput>& frames, double cap_kw, double cap_kvar) {
  double factor = 1.0;
  for (const auto& f : frames) {
    const double p = f.total_p(), q = f.total_q();
    if (p > cap_kw) factor = std::min(factor, cap_kw / p);
    if (q > cap_kvar) factor = std::min(factor, cap_kvar / q);
  }
  if (factor < 1.0) {
    for (auto& f : frames) {
      for (auto& v : f.load_p) v *= factor;
      for (auto& v : f.load_q) v *= factor;
    }
  }
  return factor;
}

/// Per-minute synthetic profiles. Three household streams (homes A, B, C) are synthesized per day
/// and every load bus hosts 4..10 houses, each a copy of one stream. PV availability is a clear-sky
/// bell scaled by rating with multiplicative cloud dips; cloudy days also run cooler (less AC).
/// Demand is rescaled globally so its peak sits at `peak_fraction` of the binding network cap.
inline SynthesizedProfiles synth_profiles(const std::vector<int>& load_buses, const std::vector<double>& pv_ratings,
                                          std::uint64_t seed, const ProfileConfig& cfg = {}) {
  const int M = cfg.minutes_per_day;
  const std::size_t total = static_cast<std::size_t>(cfg.days) * static_cast<std::size_t>(M);
  constexpr std::size_t kTypes = detail::kArchetypes.size();
  SynthesizedProfiles out;

  auto assign_rng = derive_rng(seed, 0, "houses");
  std::vector<std::array<int, kTypes>> counts;
  for (int bus : load_buses) {
    HouseAssignment h{bus, {}};
    std::array<int, kTypes> c{};
    const int n = uniform_int(assign_rng, cfg.min_houses, cfg.max_houses);
    for (int i = 0; i < n; ++i) {
      const int type = uniform_int(assign_rng, 0, static_cast<int>(kTypes) - 1);
      h.types.push_back(type);
      ++c[static_cast<std::size_t>(type)];
    }
    counts.push_back(c);
    out.houses.push_back(std::move(h));
  }

  std::vector<double> cloud_depth(static_cast<std::size_t>(cfg.days));
  for (int day = 0; day < cfg.days; ++day) {
    auto rng = derive_rng(seed, static_cast<std::uint64_t>(day), "cloud-day");
    const double u = uniform01(rng);
    cloud_depth[static_cast<std::size_t>(day)] = cfg.cloudiness * 0.35 * u * u;  // most days are nearly clear
  }

  // One stream per archetype per day.
  std::vector<std::array<double, kTypes>> stream(total);
  for (int day = 0; day < cfg.days; ++day) {
    const double cool = 1.0 - 1.5 * cloud_depth[static_cast<std::size_t>(day)];
    for (std::size_t a = 0; a < kTypes; ++a) {
      auto rng = derive_rng(seed, static_cast<std::uint64_t>(day) * kTypes + a, "home-stream");
      const auto& h = detail::kArchetypes[a];
      const double day_factor = std::clamp(1.0 + cfg.day_variation * normal(rng), 0.7, 1.3);
      const double ac_factor = std::max(0.0, cool + 0.1 * normal(rng));
      std::vector<double> series(static_cast<std::size_t>(M), 0.0);
      for (int m = 0; m < M; ++m) {
        const double t = cfg.start_hour + m / 60.0;
        const double ac = h.ac_kw / (1.0 + std::exp(-(t - h.ac_mid_h) / h.ac_ramp_h * 2.0));
        series[static_cast<std::size_t>(m)] =
            day_factor * (h.floor_kw + h.morning_kw * detail::bump(t, h.morning_h, h.morning_w) +
                          h.evening_kw * detail::bump(t, h.evening_h, h.evening_w)) +
            ac_factor * ac;
      }
      // Appliance spikes: Poisson arrivals over the window.
      const double window_h = M / 60.0;
      double clock = 0.0;
      while (cfg.spikes > 0.0) {
        clock += -std::log(1.0 - uniform01(rng)) / h.spike_rate_per_h;
        if (clock >= window_h) break;
        const int start = static_cast<int>(clock * 60.0);
        const int dur = uniform_int(rng, 1, 15);
        const double amp = cfg.spikes * uniform(rng, 0.3, 2.0);
        for (int m = start; m < std::min(M, start + dur); ++m) series[static_cast<std::size_t>(m)] += amp;
      }
      for (int m = 0; m < M; ++m)
        stream[static_cast<std::size_t>(day * M + m)][a] = series[static_cast<std::size_t>(m)];
    }
  }

  // Global rescale to the configured fraction of the binding cap.
  double peak = 0.0;
  for (std::size_t t = 0; t < total; ++t) {
    double s = 0.0;
    for (const auto& c : counts)
      for (std::size_t a = 0; a < kTypes; ++a) s += c[a] * stream[t][a];
    peak = std::max(peak, s);
  }
  const double p_cap = std::min(cfg.cap_kw, cfg.cap_kvar / kLoadQOverP);
  out.load_scale = peak > 0.0 ? cfg.peak_fraction * p_cap / peak : 1.0;

  // PV availability: shared cloud field plus a per-plant component.
  std::vector<std::vector<double>> avail(pv_ratings.size(), std::vector<double>(total, 0.0));
  for (int day = 0; day < cfg.days; ++day) {
    auto rng = derive_rng(seed, static_cast<std::uint64_t>(day), "clouds");
    const double depth = cloud_depth[static_cast<std::size_t>(day)];
    double shared = 0.0;
    std::vector<double> local(pv_ratings.size(), 0.0);
    for (int m = 0; m < M; ++m) {
      shared = 0.97 * shared + 0.243 * normal(rng);  // AR(1), unit stationary variance
      const double clear = detail::clear_sky(m, M);
      for (std::size_t k = 0; k < pv_ratings.size(); ++k) {
        local[k] = 0.9 * local[k] + 0.436 * normal(rng);
        const double cover = 1.0 / (1.0 + std::exp(-(0.8 * shared + 0.6 * local[k])));  // in (0, 1)
        const double att = std::clamp(1.0 - depth * 2.0 * cover, 0.0, 1.0);
        avail[k][static_cast<std::size_t>(day * M + m)] = pv_ratings[k] * cfg.pv_peak * clear * att;
      }
    }
  }

  out.frames.resize(total);
  for (std::size_t t = 0; t < total; ++t) {
    auto& f = out.frames[t];
    f.timestamp = static_cast<long>(t);
    f.load_p.resize(load_buses.size());
    f.load_q.resize(load_buses.size());
    for (std::size_t b = 0; b < load_buses.size(); ++b) {
      double p = 0.0;
      for (std::size_t a = 0; a < kTypes; ++a) p += counts[b][a] * stream[t][a];
      f.load_p[b] = p * out.load_scale;
      f.load_q[b] = f.load_p[b] * kLoadQOverP;
    }
    f.pv_available.resize(pv_ratings.size());
    for (std::size_t k = 0; k < pv_ratings.size(); ++k) f.pv_available[k] = avail[k][t];
  }
  enforce_caps(out.frames, cfg.cap_kw, cfg.cap_kvar);
  return out;
}

inline constexpr std::string_view kLoadProfileHeader = "timestamp,bus,p_kw";
inline constexpr std::string_view kPvProfileHeader = "timestamp,pv_id,p_avail_kw";

struct ImportedProfiles {
  std::vector<FrameInput> frames;
  std::vector<std::string> warnings;
  double load_scale = 1.0;
};

/// Builds frames from measured data. Every timestamp between the first and last must be present
/// for every load bus and PV; missing buses at a timestamp are a schema error, missing minutes a gap error.
inline ImportedProfiles import_profiles(const std::string& load_csv, const std::string& pv_csv,
                                        const std::vector<int>& load_buses, std::size_t num_pvs,
                                        double cap_kw = case69::kLoadCapKw, double cap_kvar = case69::kLoadCapKvar) {
  std::map<int, std::size_t> bus_index;
  for (std::size_t i = 0; i < load_buses.size(); ++i) bus_index[load_buses[i]] = i;

  std::map<long, std::vector<double>> loads;
  std::map<long, std::vector<std::size_t>> load_seen;
  std::size_t line = 1;
  for (const auto& row : csv::read(load_csv, kLoadProfileHeader)) {
    const auto where = load_csv + ":" + std::to_string(++line);
    const long ts = static_cast<long>(csv::to_int(row[0], where));
    const int bus = static_cast<int>(csv::to_int(row[1], where));
    const double p = csv::to_double(row[2], where);
    const auto it = bus_index.find(bus);
    if (it == bus_index.end()) throw ParseError{where + ": bus " + std::to_string(bus) + " is not a load bus"};
    if (p < 0.0) throw ParseError{where + ": negative demand"};
    auto& v = loads[ts];
    if (v.empty()) v.assign(load_buses.size(), 0.0);
    v[it->second] += p;
    load_seen[ts].push_back(it->second);
  }
  std::map<long, std::vector<double>> pv;
  std::map<long, std::size_t> pv_count;
  line = 1;
  for (const auto& row : csv::read(pv_csv, kPvProfileHeader)) {
    const auto where = pv_csv + ":" + std::to_string(++line);
    const long ts = static_cast<long>(csv::to_int(row[0], where));
    const auto id = csv::to_int(row[1], where);
    const double p = csv::to_double(row[2], where);
    if (id < 1 || static_cast<std::size_t>(id) > num_pvs) throw ParseError{where + ": unknown pv_id"};
    if (p < 0.0) throw ParseError{where + ": negative PV availability"};
    auto& v = pv[ts];
    if (v.empty()) v.assign(num_pvs, 0.0);
    v[static_cast<std::size_t>(id - 1)] = p;
    ++pv_count[ts];
  }
  if (loads.empty()) throw ParseError{load_csv + ": no data rows"};

  std::vector<long> gaps;
  const long first = loads.begin()->first, last = loads.rbegin()->first;
  for (long ts = first; ts <= last; ++ts) {
    if (!loads.count(ts) || !pv.count(ts)) gaps.push_back(ts);
  }
  if (!gaps.empty()) {
    std::string msg = "timestamp gaps:";
    for (std::size_t i = 0; i < gaps.size() && i < 20; ++i) msg += " " + std::to_string(gaps[i]);
    if (gaps.size() > 20) msg += " ... (" + std::to_string(gaps.size()) + " total)";
    throw ParseError{msg};
  }
  for (const auto& [ts, seen] : load_seen) {
    std::set<std::size_t> unique(seen.begin(), seen.end());
    if (unique.size() != load_buses.size())
      throw ParseError{load_csv + ": timestamp " + std::to_string(ts) + " does not cover every load bus"};
  }
  for (const auto& [ts, count] : pv_count)
    if (count != num_pvs) throw ParseError{pv_csv + ": timestamp " + std::to_string(ts) + " does not cover every PV"};

  ImportedProfiles out;
  for (long ts = first; ts <= last; ++ts) {
    FrameInput f;
    f.timestamp = ts - first;
    f.load_p = loads[ts];
    f.load_q.resize(f.load_p.size());
    for (std::size_t b = 0; b < f.load_p.size(); ++b) f.load_q[b] = f.load_p[b] * kLoadQOverP;
    f.pv_available = pv[ts];
    out.frames.push_back(std::move(f));
  }
  out.load_scale = enforce_caps(out.frames, cap_kw, cap_kvar);
  if (out.load_scale < 1.0)
    out.warnings.push_back("imported demand exceeds the network cap; rescaled by " + fmt6(out.load_scale));
  return out;
}

}  // namespace pvids
