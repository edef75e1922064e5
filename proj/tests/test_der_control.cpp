#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "pvids/attack.hpp"
#include "pvids/case69.hpp"
#include "pvids/der_control.hpp"

using namespace pvids;

namespace {

constexpr double kZbase = 12.66 * 12.66 / 10.0;

NetworkModel two_bus(double r_pu, double x_pu) {
  return NetworkModel{{{1, BusKind::substation, 12.66}, {2, BusKind::load, 12.66}},
                      {{1, 1, 2, r_pu * kZbase, x_pu * kZbase, true}}};
}

// Receiving-end voltage of a two-bus feeder for net consumption (p, q) in pu.
double two_bus_voltage(double r, double x, double p, double q) {
  const double b = 1.0 - 2.0 * (r * p + x * q);
  const double zs2 = (r * r + x * x) * (p * p + q * q);
  return std::sqrt((b + std::sqrt(b * b - 4.0 * zs2)) / 2.0);
}

InjectionSet nominal(const NetworkModel& m, double scale = 1.0) {
  InjectionSet inj(m.num_buses());
  const auto loads = case69::nominal_loads();
  for (std::size_t i = 0; i < loads.size(); ++i)
    inj.add(static_cast<int>(i + 1), -scale * loads[i].first, -scale * loads[i].second);
  return inj;
}

std::vector<PvUnit> voltvar_units(const VoltVarCurve& curve = {}) {
  return make_setting(SettingId::S3, case69::default_pv_placements(), 1.0, curve);
}

}  // namespace

TEST(DerControl, MaxPOutput) {
  EXPECT_EQ(output_max_p(300, 420), (PvOutput{300, 0}));
  EXPECT_EQ(output_max_p(500, 420), (PvOutput{420, 0}));
  EXPECT_EQ(output_max_p(0, 420), (PvOutput{0, 0}));
  EXPECT_THROW(output_max_p(-1, 420), ValidationError);
}

TEST(DerControl, ConstantPfOutput) {
  EXPECT_EQ(output_constant_pf(100, 1.0, 200), (PvOutput{100, 0}));
  const auto lead = output_constant_pf(100, 0.8, 200);
  EXPECT_DOUBLE_EQ(lead.p, 100);
  EXPECT_NEAR(lead.q, 75, 1e-12);
  const auto lag = output_constant_pf(100, -0.8, 200);
  EXPECT_NEAR(lag.q, -75, 1e-12);
  EXPECT_THROW(output_constant_pf(100, 0.0, 200), ValidationError);
  EXPECT_THROW(output_constant_pf(100, 1.2, 200), ValidationError);
}

TEST(DerControl, ConstantPfIsClippedToCapability) {
  const auto out = output_constant_pf(100, 0.8, 100);
  EXPECT_DOUBLE_EQ(out.p, 100);
  EXPECT_DOUBLE_EQ(out.q, 0);  // full active power leaves no reactive headroom
}

TEST(DerControl, VoltVarCurveAnchors) {
  const VoltVarCurve c{};
  EXPECT_EQ(voltvar_q(c, 1.00, 100, 0), 0.0);
  EXPECT_DOUBLE_EQ(voltvar_q(c, 0.90, 100, 0), 44.0);
  EXPECT_DOUBLE_EQ(voltvar_q(c, 0.92, 100, 0), 44.0);
  EXPECT_DOUBLE_EQ(voltvar_q(c, 0.98, 100, 0), 0.0);
  EXPECT_NEAR(voltvar_q(c, 0.95, 100, 0), 22.0, 1e-9);
  EXPECT_DOUBLE_EQ(voltvar_q(c, 1.10, 100, 0), -44.0);
  EXPECT_NEAR(voltvar_q(c, 1.05, 100, 0), -22.0, 1e-9);
}

TEST(DerControl, VoltVarRespectsCapabilityCircle) {
  const VoltVarCurve c{};
  const double q = voltvar_q(c, 0.90, 100, 95);
  EXPECT_NEAR(q, std::sqrt(100.0 * 100.0 - 95.0 * 95.0), 1e-9);
  for (double v = 0.85; v <= 1.15; v += 0.005)
    for (double p : {0.0, 50.0, 90.0, 100.0}) {
      const double qq = voltvar_q(c, v, 100, p);
      EXPECT_LE(p * p + qq * qq, 100.0 * 100.0 + 1e-9);
    }
}

TEST(DerControl, CurveMonotonicity) {
  const VoltVarCurve c{};
  const auto inv = c.inverted();
  double prev = voltvar_q(c, 0.85, 100, 10), prev_inv = voltvar_q(inv, 0.85, 100, 10);
  for (double v = 0.85; v <= 1.15; v += 0.001) {
    const double q = voltvar_q(c, v, 100, 10), qi = voltvar_q(inv, v, 100, 10);
    EXPECT_LE(q, prev + 1e-12);
    EXPECT_GE(qi, prev_inv - 1e-12);
    prev = q;
    prev_inv = qi;
  }
}

TEST(DerControl, UnitValidation) {
  PvUnit u{25, 420, 420, PvMode::MaxP, 1.0, 420, {}};
  EXPECT_NO_THROW(u.validate());
  auto bad = u;
  bad.s_rated = 400;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = u;
  bad.p_limit = 500;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = u;
  bad.curve.v2 = 0.90;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(DerControl, ZeroAvailabilityMatchesPlainSolve) {
  const auto m = case69::network();
  const auto inj = nominal(m);
  VoltVarCurve wide{0.80, 0.44, 0.81, 1.19, 1.20, -0.44};
  const auto res = solve_with_voltvar(m, inj, voltvar_units(wide), {0, 0, 0, 0});
  const auto plain = solve(m, inj);
  ASSERT_TRUE(res.converged);
  EXPECT_EQ(res.solution.v_pu, plain.v_pu);
  for (const auto& o : res.outputs) EXPECT_EQ(o, (PvOutput{0, 0}));
}

TEST(DerControl, TwoBusFixedPointMatchesBisection) {
  const double r = 0.1, x = 0.1, load_p = 0.3, load_q = 0.15, pv_p = 0.05;
  const VoltVarCurve c{};
  const double s = 600.0;
  // Oracle: root of g(q) = s * curve(V(q)) - q with V from the closed form, q in kvar.
  auto g = [&](double q) {
    const double v = two_bus_voltage(r, x, load_p - pv_p, load_q - q / 10000.0);
    return s * c.fraction(v) - q;
  };
  double lo = -s, hi = s;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2.0;
    (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
  }
  const double q_star = (lo + hi) / 2.0;
  ASSERT_GT(q_star, 1.0) << "operating point should sit on the sloped segment";

  const auto m = two_bus(r, x);
  InjectionSet inj(2);
  inj.add(2, -load_p * 10000.0, -load_q * 10000.0);
  PvUnit u{2, 600, 600, PvMode::VoltVar, 1.0, 600, c};
  const auto res = solve_with_voltvar(m, inj, {u}, {pv_p * 10000.0}, {1e-12, 100}, {1e-7, 500, 0.5});
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.outputs[0].q, q_star, 1e-5);
}

TEST(DerControl, NoonFrameConvergesWithinTwentyOuterIterations) {
  const auto m = case69::network();
  std::vector<double> avail;
  for (const auto& p : case69::default_pv_placements()) avail.push_back(0.9 * p.p_rated_kw);
  const auto res = solve_with_voltvar(m, nominal(m), voltvar_units(), avail);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.outer_iterations, 20);
  EXPECT_LE(res.max_residual, 0.01);
  const auto units = voltvar_units();
  for (std::size_t k = 0; k < units.size(); ++k)
    EXPECT_NEAR(res.outputs[k].q, voltvar_q({}, res.solution.v(units[k].bus_id), units[k].s_rated, avail[k]), 0.01);
}

TEST(DerControl, DampingDoesNotMoveTheFixedPoint) {
  const auto m = case69::network();
  Rng rng{99};
  for (int trial = 0; trial < 5; ++trial) {
    auto units = voltvar_units();
    for (auto& u : units) u.curve = random_curve(rng);
    std::vector<double> avail;
    for (const auto& u : units) avail.push_back(uniform(rng, 0.0, u.p_rated));
    const auto inj = nominal(m, uniform(rng, 0.3, 1.0));
    const OuterLoopConfig a{0.01, 200, 0.5}, b{0.01, 200, 0.25};
    const auto ra = solve_with_voltvar(m, inj, units, avail, {}, a);
    const auto rb = solve_with_voltvar(m, inj, units, avail, {}, b);
    ASSERT_TRUE(ra.converged && rb.converged);
    for (std::size_t k = 0; k < units.size(); ++k) EXPECT_NEAR(ra.outputs[k].q, rb.outputs[k].q, 10 * 0.01);
  }
}

TEST(DerControl, OuterLoopRejectsBadConfig) {
  const auto m = case69::network();
  EXPECT_THROW(solve_with_voltvar(m, nominal(m), voltvar_units(), {1, 1, 1, 1}, {}, {0.01, 100, 0.0}),
               ValidationError);
  EXPECT_THROW(solve_with_voltvar(m, nominal(m), voltvar_units(), {1, 1}), ValidationError);
}

TEST(DerControl, PvConfigCsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pvids_test_der";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "pv_config.csv").string();
  auto units = make_setting(SettingId::S4, case69::default_pv_placements());
  units[1].pf = -0.9;
  units[2].p_limit = 100;
  {
    std::ofstream os{path};
    write_pv_config(os, units);
  }
  EXPECT_EQ(read_pv_config(path), units);
  {
    std::ofstream os{path};
    os << kPvConfigHeader << "\n25,420,voltvar,,,,,,,,\n32,180,pf,0.95,,,,,,,\n";
  }
  const auto defaults = read_pv_config(path);
  ASSERT_EQ(defaults.size(), 2u);
  EXPECT_EQ(defaults[0].curve, VoltVarCurve::rule21());
  EXPECT_EQ(defaults[0].p_limit, 420);
  EXPECT_EQ(defaults[1].pf, 0.95);
  {
    std::ofstream os{path};
    os << kPvConfigHeader << "\n25,420,turbo,,,,,,,,\n";
  }
  EXPECT_THROW(read_pv_config(path), ParseError);
}
