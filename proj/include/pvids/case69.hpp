#pragma once

#include <array>
#include <vector>

#include "pvids/grid.hpp"

namespace pvids::case69 {

// Baran & Wu (1989) 69-bus feeder. Impedances in ohms on 12.66 kV; nominal load at
// the receiving bus in kW / kvar. Branches 69..73 are the normally-open tie switches.
struct BranchRow {
  int id, from, to;
  double r, x;
  double load_p, load_q;  // nominal load at `to` (zero for tie switches)
};

inline constexpr std::array<BranchRow, 73> kBranches{{
    {1, 1, 2, 0.0005, 0.0012, 0.0, 0.0},
    {2, 2, 3, 0.0005, 0.0012, 0.0, 0.0},
    {3, 3, 4, 0.0015, 0.0036, 0.0, 0.0},
    {4, 4, 5, 0.0251, 0.0294, 0.0, 0.0},
    {5, 5, 6, 0.3660, 0.1864, 2.6, 2.2},
    {6, 6, 7, 0.3811, 0.1941, 40.4, 30.0},
    {7, 7, 8, 0.0922, 0.0470, 75.0, 54.0},
    {8, 8, 9, 0.0493, 0.0251, 30.0, 22.0},
    {9, 9, 10, 0.8190, 0.2707, 28.0, 19.0},
    {10, 10, 11, 0.1872, 0.0619, 145.0, 104.0},
    {11, 11, 12, 0.7114, 0.2351, 145.0, 104.0},
    {12, 12, 13, 1.0300, 0.3400, 8.0, 5.5},
    {13, 13, 14, 1.0440, 0.3450, 8.0, 5.5},
    {14, 14, 15, 1.0580, 0.3496, 0.0, 0.0},
    {15, 15, 16, 0.1966, 0.0650, 45.5, 30.0},
    {16, 16, 17, 0.3744, 0.1238, 60.0, 35.0},
    {17, 17, 18, 0.0047, 0.0016, 60.0, 35.0},
    {18, 18, 19, 0.3276, 0.1083, 0.0, 0.0},
    {19, 19, 20, 0.2106, 0.0690, 1.0, 0.6},
    {20, 20, 21, 0.3416, 0.1129, 114.0, 81.0},
    {21, 21, 22, 0.0140, 0.0046, 5.0, 3.5},
    {22, 22, 23, 0.1591, 0.0526, 0.0, 0.0},
    {23, 23, 24, 0.3463, 0.1145, 28.0, 20.0},
    {24, 24, 25, 0.7488, 0.2475, 0.0, 0.0},
    {25, 25, 26, 0.3089, 0.1021, 14.0, 10.0},
    {26, 26, 27, 0.1732, 0.0572, 14.0, 10.0},
    {27, 3, 28, 0.0044, 0.0108, 26.0, 18.6},
    {28, 28, 29, 0.0640, 0.1565, 26.0, 18.6},
    {29, 29, 30, 0.3978, 0.1315, 0.0, 0.0},
    {30, 30, 31, 0.0702, 0.0232, 0.0, 0.0},
    {31, 31, 32, 0.3510, 0.1160, 0.0, 0.0},
    {32, 32, 33, 0.8390, 0.2816, 14.0, 10.0},
    {33, 33, 34, 1.7080, 0.5646, 19.5, 14.0},
    {34, 34, 35, 1.4740, 0.4873, 6.0, 4.0},
    {35, 3, 36, 0.0044, 0.0108, 26.0, 18.55},
    {36, 36, 37, 0.0640, 0.1565, 26.0, 18.55},
    {37, 37, 38, 0.1053, 0.1230, 0.0, 0.0},
    {38, 38, 39, 0.0304, 0.0355, 24.0, 17.0},
    {39, 39, 40, 0.0018, 0.0021, 24.0, 17.0},
    {40, 40, 41, 0.7283, 0.8509, 1.2, 1.0},
    {41, 41, 42, 0.3100, 0.3623, 0.0, 0.0},
    {42, 42, 43, 0.0410, 0.0478, 6.0, 4.3},
    {43, 43, 44, 0.0092, 0.0116, 0.0, 0.0},
    {44, 44, 45, 0.1089, 0.1373, 39.22, 26.3},
    {45, 45, 46, 0.0009, 0.0012, 39.22, 26.3},
    {46, 4, 47, 0.0034, 0.0084, 0.0, 0.0},
    {47, 47, 48, 0.0851, 0.2083, 79.0, 56.4},
    {48, 48, 49, 0.2898, 0.7091, 384.7, 274.5},
    {49, 49, 50, 0.0822, 0.2011, 384.7, 274.5},
    {50, 8, 51, 0.0928, 0.0473, 40.5, 28.3},
    {51, 51, 52, 0.3319, 0.1114, 3.6, 2.7},
    {52, 9, 53, 0.1740, 0.0886, 4.35, 3.5},
    {53, 53, 54, 0.2030, 0.1034, 26.4, 19.0},
    {54, 54, 55, 0.2842, 0.1447, 24.0, 17.2},
    {55, 55, 56, 0.2813, 0.1433, 0.0, 0.0},
    {56, 56, 57, 1.5900, 0.5337, 0.0, 0.0},
    {57, 57, 58, 0.7837, 0.2630, 0.0, 0.0},
    {58, 58, 59, 0.3042, 0.1006, 100.0, 72.0},
    {59, 59, 60, 0.3861, 0.1172, 0.0, 0.0},
    {60, 60, 61, 0.5075, 0.2585, 1244.0, 888.0},
    {61, 61, 62, 0.0974, 0.0496, 32.0, 23.0},
    {62, 62, 63, 0.1450, 0.0738, 0.0, 0.0},
    {63, 63, 64, 0.7105, 0.3619, 227.0, 162.0},
    {64, 64, 65, 1.0410, 0.5302, 59.0, 42.0},
    {65, 11, 66, 0.2012, 0.0611, 18.0, 13.0},
    {66, 66, 67, 0.0047, 0.0014, 18.0, 13.0},
    {67, 12, 68, 0.7394, 0.2444, 28.0, 20.0},
    {68, 68, 69, 0.0047, 0.0016, 28.0, 20.0},
    {69, 11, 43, 0.5, 0.5, 0.0, 0.0},
    {70, 13, 21, 0.5, 0.5, 0.0, 0.0},
    {71, 15, 46, 1.0, 1.0, 0.0, 0.0},
    {72, 50, 59, 2.0, 2.0, 0.0, 0.0},
    {73, 27, 65, 1.0, 1.0, 0.0, 0.0},
}};

inline constexpr double kBaseKv = 12.66;

/// Network-wide consumer load caps (kW, kvar) that synthesized profiles must respect.
inline constexpr double kLoadCapKw = 3802.19;
inline constexpr double kLoadCapKvar = 2964.6;

/// Buses that never host consumer load: substation, the two buses next to it, and the PV buses.
inline constexpr std::array<int, 7> kNoLoadBuses{1, 2, 3, 25, 32, 45, 62};

inline std::vector<PvPlacement> default_pv_placements() {
  return {{25, 420.0}, {32, 180.0}, {45, 330.0}, {62, 390.0}};
}

inline BusKind default_kind(int id) {
  if (id == 1) return BusKind::substation;
  for (const auto& pv : default_pv_placements())
    if (pv.bus_id == id) return BusKind::pv;
  if (id == 2 || id == 3) return BusKind::passive;
  return BusKind::load;
}

inline NetworkModel network(double base_mva = 10.0) {
  std::vector<Bus> buses;
  for (int id = 1; id <= 69; ++id) buses.push_back({id, default_kind(id), kBaseKv});
  std::vector<Branch> branches;
  for (const auto& r : kBranches) branches.push_back({r.id, r.from, r.to, r.r, r.x, r.id <= 68});
  return NetworkModel{std::move(buses), std::move(branches), kBaseKv, base_mva};
}

/// Nominal Baran-Wu (P kW, Q kvar) per bus, indexed by bus id - 1.
inline std::vector<std::pair<double, double>> nominal_loads() {
  std::vector<std::pair<double, double>> loads(69, {0.0, 0.0});
  for (const auto& r : kBranches)
    if (r.id <= 68) loads[static_cast<std::size_t>(r.to - 1)] = {r.load_p, r.load_q};
  return loads;
}

}  // namespace pvids::case69
