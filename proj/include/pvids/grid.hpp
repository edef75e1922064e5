#pragma once

#include <algorithm>
#include <charconv>
#include <deque>
#include <ostream>
#include <string>
#include <vector>

#include "pvids/common.hpp"

namespace pvids {

enum class BusKind { substation, load, pv, passive };

inline std::string to_string(BusKind k) {
  switch (k) {
    case BusKind::substation: return "substation";
    case BusKind::load: return "load";
    case BusKind::pv: return "pv";
    case BusKind::passive: return "passive";
  }
  return "?";
}

inline BusKind parse_bus_kind(const std::string& s) {
  if (s == "substation") return BusKind::substation;
  if (s == "load") return BusKind::load;
  if (s == "pv") return BusKind::pv;
  if (s == "passive") return BusKind::passive;
  throw ParseError{"unknown bus kind '" + s + "'"};
}

struct Bus {
  int id = 0;
  BusKind kind = BusKind::passive;
  double base_kv = 12.66;

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  bool closed = true;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct PvPlacement {
  int bus_id = 0;
  double p_rated_kw = 0.0;

  friend bool operator==(const PvPlacement&, const PvPlacement&) = default;
};

/// One energized edge of the feeder tree, oriented away from the substation.
struct RadialEdge {
  std::size_t branch;  // index into NetworkModel::branches
  int parent_bus;
  int child_bus;
};

/// Immutable after construction; bus ids are 1..N and bus `id` lives at index id-1.
class NetworkModel {
 public:
  NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches, double base_kv = 12.66, double base_mva = 10.0)
      : buses_(std::move(buses)), branches_(std::move(branches)), base_kv_(base_kv), base_mva_(base_mva) {
    validate();
    order_ = build_order();
  }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Bus& bus(int id) const { return buses_.at(static_cast<std::size_t>(id - 1)); }
  std::size_t num_buses() const { return buses_.size(); }
  double base_kv() const { return base_kv_; }
  double base_mva() const { return base_mva_; }
  double base_ohm() const { return base_kv_ * base_kv_ / base_mva_; }
  double base_kva() const { return base_mva_ * 1000.0; }

  /// Closed branches in BFS order from bus 1.
  const std::vector<RadialEdge>& radial_order() const { return order_; }

  std::vector<int> bus_ids_of(BusKind kind) const {
    std::vector<int> ids;
    for (const auto& b : buses_)
      if (b.kind == kind) ids.push_back(b.id);
    return ids;
  }

  friend bool operator==(const NetworkModel& a, const NetworkModel& b) {
    return a.buses_ == b.buses_ && a.branches_ == b.branches_ && a.base_kv_ == b.base_kv_ &&
           a.base_mva_ == b.base_mva_;
  }

 private:
  void validate() const {
    if (buses_.empty()) throw ValidationError{"network has no buses"};
    if (!(base_kv_ > 0.0) || !(base_mva_ > 0.0)) throw ValidationError{"per-unit bases must be positive"};
    for (std::size_t i = 0; i < buses_.size(); ++i) {
      if (buses_[i].id != static_cast<int>(i + 1))
        throw ValidationError{"bus ids must be unique and contiguous 1..N (found " + std::to_string(buses_[i].id) +
                              " at position " + std::to_string(i + 1) + ")"};
    }
    const auto substations = std::count_if(buses_.begin(), buses_.end(),
                                           [](const Bus& b) { return b.kind == BusKind::substation; });
    if (substations != 1 || buses_.front().kind != BusKind::substation)
      throw ValidationError{"exactly one substation bus is required and it must be bus 1"};
    std::vector<int> seen_branch;
    const int n = static_cast<int>(buses_.size());
    for (const auto& br : branches_) {
      if (std::find(seen_branch.begin(), seen_branch.end(), br.id) != seen_branch.end())
        throw ValidationError{"duplicate branch id " + std::to_string(br.id)};
      seen_branch.push_back(br.id);
      if (br.from_bus < 1 || br.from_bus > n || br.to_bus < 1 || br.to_bus > n)
        throw ValidationError{"branch " + std::to_string(br.id) + " has a dangling endpoint"};
      if (br.from_bus == br.to_bus) throw ValidationError{"branch " + std::to_string(br.id) + " is a self loop"};
      if (br.r_ohm < 0.0 || br.x_ohm < 0.0)
        throw ValidationError{"branch " + std::to_string(br.id) + " has negative impedance"};
    }
  }

  std::vector<RadialEdge> build_order() const {
    const std::size_t n = buses_.size();
    std::vector<std::vector<std::size_t>> incident(n);
    std::size_t closed = 0;
    for (std::size_t k = 0; k < branches_.size(); ++k) {
      if (!branches_[k].closed) continue;
      ++closed;
      incident[static_cast<std::size_t>(branches_[k].from_bus - 1)].push_back(k);
      incident[static_cast<std::size_t>(branches_[k].to_bus - 1)].push_back(k);
    }
    if (closed != n - 1)
      throw ValidationError{"non-radial: " + std::to_string(closed) + " closed branches for " + std::to_string(n) +
                            " buses"};
    std::vector<RadialEdge> order;
    std::vector<bool> visited(n, false);
    std::deque<int> queue{1};
    visited[0] = true;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (auto k : incident[static_cast<std::size_t>(u - 1)]) {
        const auto& br = branches_[k];
        const int v = br.from_bus == u ? br.to_bus : br.from_bus;
        if (visited[static_cast<std::size_t>(v - 1)]) continue;
        visited[static_cast<std::size_t>(v - 1)] = true;
        order.push_back({k, u, v});
        queue.push_back(v);
      }
    }
    if (order.size() != n - 1) throw ValidationError{"non-radial: closed branches contain a cycle or islanded bus"};
    return order;
  }

  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double base_kv_;
  double base_mva_;
  std::vector<RadialEdge> order_;
};

inline constexpr std::string_view kBusHeader = "id,kind,base_kv";
inline constexpr std::string_view kBranchHeader = "id,from,to,r_ohm,x_ohm,status";
inline constexpr std::string_view kPvPlacementHeader = "bus,p_rated_kw";

inline std::vector<Bus> read_buses(const std::string& path) {
  std::vector<Bus> buses;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, kBusHeader)) {
    const auto where = path + ":" + std::to_string(++line);
    Bus b;
    b.id = static_cast<int>(csv::to_int(row[0], where));
    try {
      b.kind = parse_bus_kind(row[1]);
    } catch (const ParseError& e) {
      throw ParseError{where + ": " + e.what()};
    }
    b.base_kv = csv::to_double(row[2], where);
    buses.push_back(b);
  }
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  return buses;
}

inline std::vector<Branch> read_branches(const std::string& path) {
  std::vector<Branch> branches;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, kBranchHeader)) {
    const auto where = path + ":" + std::to_string(++line);
    Branch br;
    br.id = static_cast<int>(csv::to_int(row[0], where));
    br.from_bus = static_cast<int>(csv::to_int(row[1], where));
    br.to_bus = static_cast<int>(csv::to_int(row[2], where));
    br.r_ohm = csv::to_double(row[3], where);
    br.x_ohm = csv::to_double(row[4], where);
    if (row[5] == "closed")
      br.closed = true;
    else if (row[5] == "open")
      br.closed = false;
    else
      throw ParseError{where + ": status must be 'closed' or 'open'"};
    branches.push_back(br);
  }
  return branches;
}

inline NetworkModel load_network(const std::string& bus_file, const std::string& branch_file,
                                 double base_mva = 10.0) {
  auto buses = read_buses(bus_file);
  const double kv = buses.empty() ? 12.66 : buses.front().base_kv;
  return NetworkModel{std::move(buses), read_branches(branch_file), kv, base_mva};
}

inline std::vector<PvPlacement> read_pv_placements(const std::string& path) {
  std::vector<PvPlacement> out;
  std::size_t line = 1;
  for (const auto& row : csv::read(path, kPvPlacementHeader)) {
    const auto where = path + ":" + std::to_string(++line);
    out.push_back({static_cast<int>(csv::to_int(row[0], where)), csv::to_double(row[1], where)});
    if (!(out.back().p_rated_kw > 0.0)) throw ValidationError{where + ": PV rating must be positive"};
  }
  return out;
}

/// Shortest decimal that reloads to the same double.
inline std::string fmt_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline void write_buses(std::ostream& os, const NetworkModel& m) {
  os << kBusHeader << '\n';
  for (const auto& b : m.buses()) os << b.id << ',' << to_string(b.kind) << ',' << fmt_exact(b.base_kv) << '\n';
}

inline void write_branches(std::ostream& os, const NetworkModel& m) {
  os << kBranchHeader << '\n';
  for (const auto& br : m.branches())
    os << br.id << ',' << br.from_bus << ',' << br.to_bus << ',' << fmt_exact(br.r_ohm) << ',' << fmt_exact(br.x_ohm)
       << ',' << (br.closed ? "closed" : "open") << '\n';
}

inline void write_pv_placements(std::ostream& os, const std::vector<PvPlacement>& pvs) {
  os << kPvPlacementHeader << '\n';
  for (const auto& p : pvs) os << p.bus_id << ',' << fmt_exact(p.p_rated_kw) << '\n';
}

}  // namespace pvids
