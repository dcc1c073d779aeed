#include <gtest/gtest.h>

#include "support.hpp"

using namespace extrusion;
using namespace testing_support;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Argument;
}

ControlTarget canonical_target(double T = 1.0, double nu = 1e-2, double l0 = 0.49, double l1 = 0.51) {
  return steady_speed_target(unit_params(), unit_equilibrium(), l0, l1, T, nu);
}

/// Synthesis of the canonical target, computed once per binary.
const SynthesisReport& canonical_report() {
  static const SynthesisReport r = synthesize(canonical_target(), unit_params(), unit_equilibrium());
  return r;
}

ControlTarget resting_target() {
  ControlTarget tg;
  tg.l0 = tg.l1 = 0.5;
  tg.f0 = tg.f1 = SpaceProfile(std::vector<double>(1001, 1.0 / 3.0));
  tg.T = 1.0;
  tg.nu = 1e-2;
  return tg;
}

}  // namespace

TEST(CriticalTime, Examples) {
  auto p = unit_params();
  const auto eq = unit_equilibrium();
  EXPECT_DOUBLE_EQ(critical_time(eq, p), 0.5);
  EXPECT_DOUBLE_EQ(critical_time({eq.l_e, 2.0 * eq.N_e, eq.f_pe}, p), 0.25);
  p.zeta = 2.0;
  EXPECT_DOUBLE_EQ(critical_time(eq, p), 0.25);
}

TEST(Feasibility, Examples) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  const auto short_run = feasibility_check(0.4, eq, p);
  EXPECT_FALSE(short_run.pass);
  EXPECT_NEAR(short_run.witness, 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(short_run.critical_time, 0.5);
  EXPECT_TRUE(feasibility_check(0.6, eq, p).pass);
  EXPECT_FALSE(feasibility_check(0.5, eq, p).pass);
}

TEST(BuildH, Examples) {
  const auto eq = unit_equilibrium();
  const auto flat = build_h(eq.f_pe, eq.f_pe, 0.6, 0.05, eq);
  for (double t : {0.0, 0.1, 0.3, 0.6, 0.9}) EXPECT_EQ(flat(t), eq.f_pe);

  const auto h = build_h(0.32, 0.34, 0.6, 0.06, eq);
  EXPECT_NEAR(h.max_slope(), 0.05, 1e-12);
  EXPECT_EQ(h(0.0), 0.32);
  EXPECT_EQ(h(0.6), 0.34);
  EXPECT_EQ(h(0.8), 0.34);
  EXPECT_NEAR(h.slope(0.3), 0.05, 1e-12);
  EXPECT_NEAR(h.slope(0.0), 0.0, 1e-15);

  EXPECT_EQ(kind_of([&] { build_h(0.32, 0.34, 0.6, 0.04, eq); }), ErrorKind::InfeasibleH);
  EXPECT_EQ(kind_of([&] { build_h(0.32, 0.34, 0.0, 0.1, eq); }), ErrorKind::InfeasibleH);
}

TEST(BuildH, BoundMatchesDenseSampling) {
  const auto eq = unit_equilibrium();
  Gen gen(61);
  for (int k = 0; k < 200; ++k) {
    const double v0 = eq.f_pe + gen.uniform(-0.02, 0.02), v1 = eq.f_pe + gen.uniform(-0.02, 0.02);
    const double t1 = gen.uniform(0.2, 1.5), s0 = gen.uniform(-0.05, 0.05), s1 = gen.uniform(-0.05, 0.05);
    const auto shape = static_cast<HShape>(gen.integer(0, 2));
    const auto h = build_h(v0, v1, t1, 1.0, eq, shape, s0, s1);
    EXPECT_EQ(h(0.0), v0);
    EXPECT_EQ(h(t1), v1);
    double dev = 0.0, slope = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double t = t1 * i / 4000.0;
      dev = std::max(dev, std::abs(h(t) - eq.f_pe));
      slope = std::max(slope, std::abs(h.slope(std::min(t, t1 * (1.0 - 1e-12)))));
    }
    EXPECT_NEAR(h.deviation_bound(eq.f_pe), std::max(dev, slope), 1e-6);
  }
}

TEST(Synthesize, FirstIterateSpeed) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  // l from 0.45 toward 0.55 over T = 1, frozen on [0, 0.4] where g(a, 1/3) stays away from zero.
  std::vector<double> a(401), b(401, 1.0 / 3.0);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.45 + 0.1 * (0.4 * static_cast<double>(i) / 400.0);
  ControlOptions o;
  o.N_max_factor = 100.0;
  const auto fs = detail::freeze(a, b, 0.1, 0.4, p, eq, o);
  EXPECT_NEAR(fs.N[0], 3.1, 1e-3);
  EXPECT_DOUBLE_EQ(fs.N[0], 0.1 / eval_g(0.45, 1.0 / 3.0, p));
}

TEST(Synthesize, FrozenEquilibriumCrossing) {
  const auto ctx = TraceContext::equilibrium(unit_params(), unit_equilibrium(), 0.0, 1.0, 1000);
  const auto t0 = crossing_time(ctx);
  ASSERT_TRUE(t0);
  EXPECT_NEAR(*t0, critical_time(unit_equilibrium(), unit_params()), 1e-12);
}

TEST(Synthesize, CanonicalTarget) {
  const auto tg = canonical_target();
  const auto& r = canonical_report();
  EXPECT_FALSE(r.interface_hold);
  EXPECT_EQ(r.l.values().back(), tg.l1);
  EXPECT_EQ(r.final_errors.l, 0.0);
  EXPECT_LE(r.final_errors.f, 1e-6);
  EXPECT_LE(r.distances.back(), 1e-10);
  ASSERT_GE(r.contraction_factors.size(), 3u);
  for (std::size_t k = r.contraction_factors.size() - 3; k < r.contraction_factors.size(); ++k) {
    EXPECT_LE(r.contraction_factors[k], 0.5);
  }
  EXPECT_GT(r.g_min_encountered, 1e-6);
  ASSERT_TRUE(r.t0);
  EXPECT_GT(*r.t0, 0.0);
  EXPECT_LE(*r.t0, tg.T);
  EXPECT_GT(r.t1, 0.0);
  EXPECT_LT(r.t1, tg.T);
}

TEST(Synthesize, LinearInterfaceAndEndpointPinning) {
  const auto tg = canonical_target();
  const auto& r = canonical_report();
  const std::size_t steps = r.l.size() - 1;
  for (std::size_t i = 0; i <= steps; i += 37) {
    const double expected = i == steps ? tg.l1 : tg.l0 + (tg.l1 - tg.l0) * static_cast<double>(i) / steps;
    EXPECT_EQ(r.l[i], expected);
  }
  EXPECT_EQ(r.l[0], tg.l0);
  EXPECT_EQ(r.b[0], tg.f0(1.0));
  EXPECT_EQ(r.b.values().back(), tg.f1(1.0));
  EXPECT_EQ(r.h(0.0), tg.f0(0.0));
  EXPECT_EQ(r.h(r.t1), tg.f1(1.0));
}

TEST(Synthesize, LandmarksOrderedForLongHorizon) {
  const auto tg = canonical_target(1.5);
  const auto r = synthesize(tg, unit_params(), unit_equilibrium());
  ASSERT_TRUE(r.t0);
  EXPECT_GT(*r.t0, 0.0);
  EXPECT_LT(*r.t0, r.t1);
  EXPECT_LT(r.t1, tg.T);
  // tau maps (t0, T] onto (0, t1] monotonically.
  std::vector<double> a(r.l.values().begin(), r.l.values().end());
  std::vector<double> b(r.b.values().begin(), r.b.values().end());
  const auto fs = detail::freeze(a, b, (tg.l1 - tg.l0) / tg.T, tg.T, unit_params(), unit_equilibrium(), {});
  double prev = -1.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = *r.t0 + (tg.T - *r.t0) * k / 100.0;
    const auto o = backtrace(t, 1.0, fs.ctx);
    ASSERT_FALSE(o.from_initial());
    EXPECT_GT(o.coordinate, prev);
    prev = o.coordinate;
  }
  EXPECT_NEAR(prev, r.t1, 1e-12);
}

TEST(Synthesize, Errors) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  EXPECT_EQ(kind_of([&] { synthesize(canonical_target(0.52), p, eq); }), ErrorKind::InfeasibleHorizon);
  ControlOptions tight;
  tight.N_max_factor = 0.5;
  EXPECT_EQ(kind_of([&] { synthesize(canonical_target(), p, eq, tight); }), ErrorKind::SingularG);
  ControlOptions floor;
  floor.g_min_factor = 1.0;
  EXPECT_EQ(kind_of([&] { synthesize(canonical_target(), p, eq, floor); }), ErrorKind::SingularG);
  ControlOptions budget;
  budget.max_iterations = 2;
  EXPECT_EQ(kind_of([&] { synthesize(canonical_target(), p, eq, budget); }), ErrorKind::Convergence);
  ControlOptions narrow;
  narrow.nu1 = 1e-5;
  EXPECT_EQ(kind_of([&] { synthesize(canonical_target(), p, eq, narrow); }), ErrorKind::InfeasibleH);
  auto stuck = resting_target();
  stuck.f0 = SpaceProfile::from_function(1001, [](double x) { return 1.0 / 3.0 + 0.01 * std::sin(pi * x); });
  EXPECT_EQ(kind_of([&] { synthesize(stuck, p, eq); }), ErrorKind::DegenerateTarget);
}

TEST(Synthesize, RestingTargetIsHeld) {
  const auto tg = resting_target();
  const auto r = synthesize(tg, unit_params(), unit_equilibrium());
  EXPECT_TRUE(r.interface_hold);
  for (double v : r.N.values()) EXPECT_EQ(v, 1.0);
  const auto c = verify_control(tg, r, unit_params(), unit_equilibrium());
  EXPECT_TRUE(c.interface_hold);
  EXPECT_LE(c.characteristic_l_error, 1e-8);
  EXPECT_LE(c.characteristic_f_error, 1e-8);
  EXPECT_LE(c.upwind_l_error, 5e-3);
  EXPECT_LE(c.upwind_f_error, 5e-3);
}

TEST(VerifyControl, CanonicalReplay) {
  const auto tg = canonical_target();
  const auto c = verify_control(tg, canonical_report(), unit_params(), unit_equilibrium());
  EXPECT_LE(c.characteristic_l_error, 1e-6);
  EXPECT_LE(c.characteristic_f_error, 1e-6);
  EXPECT_LE(c.upwind_l_error, 5e-3);
  EXPECT_LE(c.upwind_f_error, 5e-3);
  EXPECT_NEAR(c.control_ratio, canonical_report().control_size / tg.nu, 1e-15);
}

TEST(VerifyControl, ControlSizeScalesWithNu) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  const auto wide = canonical_target(1.0, 1e-2, 0.49, 0.51);
  const auto half = canonical_target(1.0, 5e-3, 0.495, 0.505);
  const auto a = verify_control(wide, synthesize(wide, p, eq), p, eq);
  const auto b = verify_control(half, synthesize(half, p, eq), p, eq);
  EXPECT_LE(std::abs(a.control_ratio - b.control_ratio) / a.control_ratio, 0.2);
}

TEST(VerifyControl, ReplayFailureIsReported) {
  auto tg = canonical_target();
  auto r = canonical_report();
  // A feed far from the initial corner breaks the replay's compatibility.
  r.F_in = map_values(r.F_in, [](double v) { return v + 0.1; });
  EXPECT_EQ(kind_of([&] { verify_control(tg, r, unit_params(), unit_equilibrium()); }), ErrorKind::Verification);
}

TEST(ControlProperty, ReplayHitsRandomTargets) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  Gen gen(62);
  for (int k = 0; k < 3; ++k) {
    const double l0 = eq.l_e + gen.uniform(-0.015, -0.003), l1 = eq.l_e + gen.uniform(0.003, 0.015);
    const double T = 0.8 + 0.1 * gen.integer(0, 6);
    const bool forward = gen.integer(0, 1) == 1;
    const auto tg = steady_speed_target(p, eq, forward ? l0 : l1, forward ? l1 : l0, T, 1e-2);
    const auto r = synthesize(tg, p, eq);
    EXPECT_LE(r.distances.back(), 1e-10);
    const auto c = verify_control(tg, r, p, eq);
    EXPECT_LE(c.characteristic_l_error, 1e-8);
    EXPECT_LE(c.characteristic_f_error, 1e-6) << "l0=" << tg.l0 << " l1=" << tg.l1 << " T=" << T;
    EXPECT_LE(c.upwind_f_error, 5e-3);
  }
}
