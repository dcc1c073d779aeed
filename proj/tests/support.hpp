#ifndef EXTRUSION_TESTS_SUPPORT_HPP
#define EXTRUSION_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

#include "extrusion/extrusion.hpp"

namespace testing_support {

using namespace extrusion;

inline constexpr double pi = std::numbers::pi;

inline PhysicalParams unit_params() { return PhysicalParams{}; }

/// (l_e, N_e, f_pe) = (0.5, 1, 1/3) for unit parameters.
inline EquilibriumPoint unit_equilibrium() {
  return solve_equilibrium(unit_params(), EquilibriumGiven::InterfacePosition, 0.5, 1.0);
}

/// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

  PhysicalParams params() {
    PhysicalParams p;
    p.zeta = uniform(0.2, 5.0);
    p.L = uniform(0.5, 5.0);
    p.K_d = uniform(0.1, 10.0);
    p.B = uniform(0.1, 10.0);
    p.rho0 = uniform(0.2, 5.0);
    p.V_eff = uniform(0.2, 5.0);
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

/// Data at rest on [0, horizon].
inline CauchyData equilibrium_data(double horizon = 2.0, double dt = 1e-3, std::size_t nx = 1001) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  const std::size_t nt = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
  CauchyData d;
  d.l0 = eq.l_e;
  d.params = p;
  d.eq = eq;
  d.f0 = SpaceProfile(std::vector<double>(nx, eq.f_pe));
  d.F_in = SampledFunction::constant(0.0, horizon, nt, eq.f_pe * p.rho_v() * eq.N_e);
  d.N = SampledFunction::constant(0.0, horizon, nt, eq.N_e);
  return d;
}

/// f0 = f_pe + amp sin(pi x), constant feed at the equilibrium ratio.
inline CauchyData perturbed_data(double amp = 0.01, double horizon = 2.0, double dt = 1e-3,
                                 std::size_t nx = 1001) {
  CauchyData d = equilibrium_data(horizon, dt, nx);
  const double f_pe = d.eq.f_pe;
  d.f0 = SpaceProfile::from_function(nx, [&](double x) { return f_pe + amp * std::sin(pi * x); });
  return d;
}

/**
 * f0 = f_pe + amp sin(pi x) with inflow ratio f_pe - amp sin(2 pi t): both
 * corner conditions hold, so the solution is C^1 across the characteristic
 * leaving (0,0).
 */
inline CauchyData smooth_data(double amp = 0.01, double horizon = 2.0, double dt = 1e-3, std::size_t nx = 1001) {
  CauchyData d = perturbed_data(amp, horizon, dt, nx);
  const double f_pe = d.eq.f_pe, rv = d.params.rho_v(), N_e = d.eq.N_e;
  const std::size_t nt = d.F_in.size();
  d.F_in = SampledFunction::from_function(0.0, horizon, nt,
                                          [&](double t) { return (f_pe - amp * std::sin(2.0 * pi * t)) * rv * N_e; });
  return d;
}

/// Smooth non-equilibrium trace context on [t_start, t_end].
inline TraceContext smooth_context(double t_start = 0.0, double t_end = 1.0, double step = 1e-3) {
  const auto p = unit_params();
  const std::size_t n = static_cast<std::size_t>(std::llround((t_end - t_start) / step)) + 1;
  auto l = SampledFunction::from_function(t_start, t_end, n, [](double t) { return 0.5 + 0.02 * std::sin(2.0 * t); });
  auto N = SampledFunction::from_function(t_start, t_end, n, [](double t) { return 1.0 + 0.1 * std::cos(3.0 * t); });
  auto b = SampledFunction::from_function(t_start, t_end, n, [](double t) { return 1.0 / 3.0 + 0.02 * std::sin(t); });
  return TraceContext(std::move(l), std::move(N), std::move(b), p);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing_support

#endif  // EXTRUSION_TESTS_SUPPORT_HPP
