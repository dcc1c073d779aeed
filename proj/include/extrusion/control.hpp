#ifndef EXTRUSION_CONTROL_HPP
#define EXTRUSION_CONTROL_HPP

/**
 * @file control.hpp
 * @brief Synthesis of screw speed N(t) and feed rate F_in(t) that steer the
 *        state (l, f_p) between two states near equilibrium in time T > T_e.
 *
 * For a candidate boundary trace Phi = (a, b) the screw speed is chosen as
 * N = (dl/T) / g(a, b), which makes F constant and l linear. The feed rate
 * is an artificial ramp h while the boundary characteristics still reach
 * x = 1 before T, and afterwards the target profile read along the
 * characteristic to time T. The new trace b is f0(beta) or h(tau); the
 * iteration stops at a fixed point.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "extrusion/characteristics.hpp"
#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/model.hpp"
#include "extrusion/oracle.hpp"
#include "extrusion/wellposed.hpp"

namespace extrusion {

/// Minimal control horizon l_e / (zeta N_e).
inline double critical_time(const EquilibriumPoint& eq, const PhysicalParams& p) {
  return eq.l_e / (p.zeta * eq.N_e);
}

struct FeasibilityCheck {
  bool pass = false;
  double witness = 0.0;  ///< xi(T; 0, 0) at equilibrium coefficients
  double critical_time = 0.0;
};

/**
 * T must exceed T_e. The witness is how far the characteristic leaving (0, 0)
 * gets by time T at equilibrium; points beyond it at time T only see f0.
 */
inline FeasibilityCheck feasibility_check(double T, const EquilibriumPoint& eq, const PhysicalParams& p) {
  FeasibilityCheck c;
  c.critical_time = critical_time(eq, p);
  c.pass = T > c.critical_time;
  if (T > 0.0) {
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / 1e-3)));
    const auto ctx = TraceContext::equilibrium(p, eq, 0.0, T, n);
    c.witness = xi_forward(0.0, 0.0, T, ctx);
  }
  return c;
}

enum class HShape {
  CubicSmoothstep,  ///< zero slope at both ends
  Linear,
  Matched,  ///< slope at 0 from the first-order corner condition, slope at t1 continuing the final-profile feed
};

/// Cubic Hermite ramp from v0 at t = 0 to v1 at t1 with end slopes s0, s1; constant v1 afterwards.
struct ArtificialInflow {
  double v0 = 0.0;
  double v1 = 0.0;
  double t1 = 1.0;
  double s0 = 0.0;
  double s1 = 0.0;

  double operator()(double t) const {
    if (t >= t1) return v1;
    if (t <= 0.0) return v0;
    const double s = t / t1;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * v0 + (s3 - 2.0 * s2 + s) * t1 * s0 + (-2.0 * s3 + 3.0 * s2) * v1 +
           (s3 - s2) * t1 * s1;
  }

  double slope(double t) const {
    if (t >= t1 || t < 0.0) return 0.0;
    const double s = t / t1;
    const double s2 = s * s;
    return (6.0 * s2 - 6.0 * s) * (v0 - v1) / t1 + (3.0 * s2 - 4.0 * s + 1.0) * s0 + (3.0 * s2 - 2.0 * s) * s1;
  }

  /// Exact sups of |h - c| and |h'| over [0, t1], from the cubic's critical points.
  double max_deviation(double c) const {
    double m = std::max(std::abs(v0 - c), std::abs(v1 - c));
    // h'(s t1) = A s^2 + B s + C
    const double A = 6.0 * (v0 - v1) / t1 + 3.0 * s0 + 3.0 * s1;
    const double B = -6.0 * (v0 - v1) / t1 - 4.0 * s0 - 2.0 * s1;
    const double C = s0;
    for (double s : quadratic_roots(A, B, C)) m = std::max(m, std::abs((*this)(s * t1) - c));
    return m;
  }

  double max_slope() const {
    const double A = 6.0 * (v0 - v1) / t1 + 3.0 * s0 + 3.0 * s1;
    const double B = -6.0 * (v0 - v1) / t1 - 4.0 * s0 - 2.0 * s1;
    double m = std::max(std::abs(s0), std::abs(s1));
    if (A != 0.0) {
      const double v = -B / (2.0 * A);
      if (v > 0.0 && v < 1.0) m = std::max(m, std::abs(slope(v * t1)));
    }
    return m;
  }

  /// Bound on |h - f_pe|_{W^{1,inf}}.
  double deviation_bound(double f_pe) const { return std::max(max_deviation(f_pe), max_slope()); }

  SampledFunction sample(double T, std::size_t intervals) const {
    return SampledFunction::from_function(0.0, T, intervals + 1, *this);
  }

 private:
  static std::vector<double> quadratic_roots(double A, double B, double C) {
    std::vector<double> r;
    auto keep = [&](double s) {
      if (s > 0.0 && s < 1.0) r.push_back(s);
    };
    if (A == 0.0) {
      if (B != 0.0) keep(-C / B);
      return r;
    }
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return r;
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    if (q != 0.0) keep(C / q);
    keep(q / A);
    return r;
  }
};

/**
 * Ramp h with h(0) = v0, h(t1) = v1. For Matched the end slopes are given by
 * the caller; the other shapes ignore them.
 */
inline ArtificialInflow build_h(double v0, double v1, double t1, double nu1, const EquilibriumPoint& eq,
                                HShape shape = HShape::CubicSmoothstep, double s0 = 0.0, double s1 = 0.0) {
  if (!(t1 > 0.0)) throw Error(ErrorKind::InfeasibleH, "ramp end time t1 must be positive");
  ArtificialInflow h{v0, v1, t1, 0.0, 0.0};
  if (shape == HShape::Linear) h.s0 = h.s1 = (v1 - v0) / t1;
  if (shape == HShape::Matched) {
    h.s0 = s0;
    h.s1 = s1;
  }
  const double bound = h.deviation_bound(eq.f_pe);
  if (bound > nu1) {
    std::ostringstream os;
    os << "artificial inflow needs W1,inf deviation " << bound << " > " << nu1
       << " (t1=" << t1 << "); a longer horizon lowers the ramp slope";
    throw Error(ErrorKind::InfeasibleH, os.str());
  }
  return h;
}

struct ControlTarget {
  double l0 = 0.0;
  double l1 = 0.0;
  SpaceProfile f0;
  SpaceProfile f1;
  double T = 1.0;
  double nu = 1e-2;
};

/// |l0 - l_e| + |l1 - l_e| + |f0 - f_pe|_{W1,inf} + |f1 - f_pe|_{W1,inf}.
inline double target_deviation(const ControlTarget& tg, const EquilibriumPoint& eq) {
  auto dev = [&](const SpaceProfile& f) {
    return norm(NormKind::W1inf, map_values(static_cast<const UniformSamples<SpaceAxis>&>(f),
                                            [&](double v) { return v - eq.f_pe; }));
  };
  return std::abs(tg.l0 - eq.l_e) + std::abs(tg.l1 - eq.l_e) + dev(tg.f0) + dev(tg.f1);
}

/**
 * Target pair along which the synthesized screw speed stays near N_e. The
 * ratio r(t) that makes F = (l1 - l0)/T at N = N_e (with l extended linearly
 * past [0, T]) is laid out so that the value at x reaches x = 1 at the
 * matching time: f0(x) = r((1 - x) T_e), f1(x) = r(T + (1 - x) T_e).
 */
inline ControlTarget steady_speed_target(const PhysicalParams& p, const EquilibriumPoint& eq, double l0, double l1,
                                         double T, double nu, std::size_t points = 1001) {
  const double G = (l1 - l0) / (T * eq.N_e) / p.zeta;
  if (!(std::abs(G) < 1.0)) throw Error(ErrorKind::Argument, "interface speed too large for a steady screw speed");
  const double Te = critical_time(eq, p);
  auto ratio = [&](double t) {
    const double a = l0 + (l1 - l0) * t / T;
    detail::require_interface_in_domain(a, p);
    return (detail::die_ratio(a, p) - G) / (1.0 - G);
  };
  ControlTarget tg;
  tg.l0 = l0;
  tg.l1 = l1;
  tg.T = T;
  tg.nu = nu;
  tg.f0 = SpaceProfile::from_function(points, [&](double x) { return ratio((1.0 - x) * Te); });
  tg.f1 = SpaceProfile::from_function(points, [&](double x) { return ratio(T + (1.0 - x) * Te); });
  return tg;
}

struct ControlOptions {
  double dt = 1e-3;
  double tolerance = 1e-10;
  int max_iterations = 200;
  double g_min_factor = 1e-6;   ///< |g| floor, in units of zeta
  double N_min_factor = 0.1;    ///< N range, in units of N_e
  double N_max_factor = 10.0;
  double horizon_margin = 0.1;  ///< T must exceed (1 + margin) T_e
  std::optional<double> nu1;    ///< default: eps1_bound / 6
  HShape h_shape = HShape::Matched;
  double degenerate_factor = 1e-6;  ///< |l1 - l0| <= factor * L counts as no interface motion
  double hold_tolerance = 1e-9;
  double dx = 1e-3;                 ///< grid of the final-profile check
};

struct FinalErrors {
  double l = 0.0;  ///< |l(T) - l1|
  double f = 0.0;  ///< |f_p(T,.) - f1|_{Linf}
};

struct SynthesisReport {
  SampledFunction N;
  SampledFunction F_in;
  SampledFunction l;
  SampledFunction b;  ///< fixed-point f_p(t,1)
  ArtificialInflow h;
  std::optional<double> t0;  ///< characteristic from (0,0) reaches x = 1
  double t1 = 0.0;           ///< characteristic through (T,1) leaves x = 0
  int iterations = 0;
  std::vector<double> distances;
  std::vector<double> contraction_factors;
  double g_min_encountered = std::numeric_limits<double>::infinity();
  FinalErrors final_errors;
  double control_size = 0.0;      ///< |F_in/(rho0 V_eff N) - f_pe|_{W1,inf} + |N - N_e|_{Linf}
  double target_deviation = 0.0;  ///< left side of the smallness assumption
  bool within_assumption = true;  ///< target_deviation <= nu
  bool interface_hold = false;    ///< degenerate l1 == l0 handled without the linear-l construction
};

namespace detail {

struct FrozenStep {
  std::vector<double> N;
  TraceContext ctx;
  double g_min;
};

inline FrozenStep freeze(const std::vector<double>& a, const std::vector<double>& b, double G, double T,
                         const PhysicalParams& p, const EquilibriumPoint& eq, const ControlOptions& o) {
  const std::size_t n = a.size();
  std::vector<double> N(n);
  double g_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = eval_g(a[i], b[i], p);
    g_min = std::min(g_min, std::abs(g));
    const double t = T * static_cast<double>(i) / static_cast<double>(n - 1);
    if (std::abs(g) < o.g_min_factor * p.zeta) {
      std::ostringstream os;
      os << "|g(a,b)|=" << std::abs(g) << " below floor " << o.g_min_factor * p.zeta << " at t=" << t;
      throw Error(ErrorKind::SingularG, os.str());
    }
    N[i] = G / g;
    if (!(N[i] >= o.N_min_factor * eq.N_e && N[i] <= o.N_max_factor * eq.N_e)) {
      std::ostringstream os;
      os << "synthesized screw speed N=" << N[i] << " at t=" << t << " outside [" << o.N_min_factor * eq.N_e << ", "
         << o.N_max_factor * eq.N_e << "] (g=" << g << ")";
      throw Error(ErrorKind::SingularG, os.str());
    }
  }
  TraceContext ctx(SampledFunction(0.0, T, a), SampledFunction(0.0, T, N), SampledFunction(0.0, T, b), p);
  return {std::move(N), std::move(ctx), g_min};
}

inline double ramp_end(const TraceContext& ctx, double T) {
  const Origin o = backtrace(T, 1.0, ctx);
  if (o.from_initial()) {
    std::ostringstream os;
    os << "characteristic through (T,1) starts inside the domain at x=" << o.coordinate
       << "; the horizon is too short for the frozen speeds";
    throw Error(ErrorKind::InfeasibleHorizon, os.str());
  }
  return o.coordinate;
}

/// Ramp for the current frozen coefficients; Matched slopes make the inflow ratio C^1 at 0 and t1.
inline ArtificialInflow ramp_for(const TraceContext& ctx, const ControlTarget& tg, double t1, double nu1,
                                 const EquilibriumPoint& eq, const ControlOptions& o) {
  double s0 = 0.0, s1 = 0.0;
  if (o.h_shape == HShape::Matched) {
    const auto& p = ctx.params();
    const double f0x = difference_quotient(tg.f0)[0];
    s0 = -f0x * p.zeta * ctx.N()[0] / ctx.l()[0];
    const double f1x = difference_quotient(tg.f1)[tg.f1.size() - 1];
    const double T = ctx.t_end();
    s1 = -f1x * std::exp(ctx.Q(t1) - ctx.Q(T)) * p.zeta * ctx.N()(t1) / ctx.l()(t1);
  }
  return build_h(tg.f0(0.0), tg.f1(1.0), t1, nu1, eq, o.h_shape, s0, s1);
}

inline std::vector<double> trace_map(const TraceContext& ctx, const SpaceProfile& f0, const ArtificialInflow& h) {
  std::vector<double> out(ctx.size());
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    const Origin o = backtrace(ctx.node(i), 1.0, ctx);
    out[i] = o.from_initial() ? f0(std::clamp(o.coordinate, 0.0, 1.0)) : h(o.coordinate);
  }
  return out;
}

inline void finish_report(SynthesisReport& r, const ControlTarget& tg, const PhysicalParams& p,
                          const EquilibriumPoint& eq, const std::vector<double>& a, const std::vector<double>& b,
                          const FrozenStep& fs, const ControlOptions& o) {
  const std::size_t n = a.size();
  const double T = tg.T;
  std::vector<double> F_in(n), ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = fs.ctx.node(i);
    ratio[i] = t <= r.t1 ? r.h(t) : tg.f1(std::clamp(fs.ctx.position(T, t, 0.0), 0.0, 1.0));
    F_in[i] = ratio[i] * p.rho_v() * fs.N[i];
  }
  r.N = SampledFunction(0.0, T, fs.N);
  r.F_in = SampledFunction(0.0, T, std::move(F_in));
  r.l = SampledFunction(0.0, T, a);
  r.b = SampledFunction(0.0, T, b);
  r.t0 = crossing_time(fs.ctx);

  r.final_errors.l = std::abs(a.back() - tg.l1);
  const std::size_t nx = intervals_for(1.0, o.dx);
  for (std::size_t j = 0; j <= nx; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(nx);
    const Origin org = backtrace(T, x, fs.ctx);
    const double v = org.from_initial() ? tg.f0(std::clamp(org.coordinate, 0.0, 1.0))
                                        : inflow_value(r.F_in(org.coordinate), r.N(org.coordinate), p);
    r.final_errors.f = std::max(r.final_errors.f, std::abs(v - tg.f1(x)));
  }

  const auto ratio_dev = map_values(SampledFunction(0.0, T, std::move(ratio)), [&](double v) { return v - eq.f_pe; });
  double n_dev = 0.0;
  for (double v : fs.N) n_dev = std::max(n_dev, std::abs(v - eq.N_e));
  r.control_size = norm(NormKind::W1inf, ratio_dev) + n_dev;
  r.target_deviation = target_deviation(tg, eq);
  r.within_assumption = r.target_deviation <= tg.nu;
}

}  // namespace detail

/**
 * Fixed-point synthesis of (N, F_in). When l1 == l0 the linear-l construction
 * gives N == 0; if f0 and f1(1) already sit at the die ratio of l0 the
 * interface can be held with N == N_e instead (flagged in the report),
 * otherwise the target is rejected.
 */
inline SynthesisReport synthesize(const ControlTarget& tg, const PhysicalParams& p, const EquilibriumPoint& eq,
                                  const ControlOptions& o = {}) {
  p.validate();
  const double T = tg.T;
  const double Te = critical_time(eq, p);
  if (!(T > Te * (1.0 + o.horizon_margin))) {
    std::ostringstream os;
    os << "horizon T=" << T << " must exceed the critical time T_e=" << Te << " by " << 100.0 * o.horizon_margin
       << "%";
    throw Error(ErrorKind::InfeasibleHorizon, os.str());
  }
  detail::require_interface_in_domain(tg.l0, p);
  detail::require_interface_in_domain(tg.l1, p);
  for (const SpaceProfile* f : {&tg.f0, &tg.f1}) {
    for (double v : f->values()) {
      if (!(v > 0.0 && v < 1.0)) throw Error(ErrorKind::Domain, "target filling ratios must lie in (0,1)");
    }
  }
  const std::size_t steps = intervals_for(T, o.dt);
  const std::size_t n = steps + 1;
  const double nu1 = o.nu1 ? *o.nu1 : eps1_bound(eq, p) / 6.0;
  const double dl = tg.l1 - tg.l0;

  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = i == steps ? tg.l1 : tg.l0 + dl * static_cast<double>(i) / steps;

  SynthesisReport r;
  if (std::abs(dl) <= o.degenerate_factor * p.L) {
    const double hold = detail::die_ratio(tg.l0, p);
    bool ok = std::abs(tg.f1(1.0) - hold) <= o.hold_tolerance;
    for (double v : tg.f0.values()) ok = ok && std::abs(v - hold) <= o.hold_tolerance;
    if (!ok) {
      std::ostringstream os;
      os << "l1 == l0 makes the screw speed vanish; only targets with f0 == f1(1) == " << hold
         << " (die ratio at l0) can be held";
      throw Error(ErrorKind::DegenerateTarget, os.str());
    }
    std::vector<double> b(n, hold);
    std::vector<double> N(n, eq.N_e);
    TraceContext ctx(SampledFunction(0.0, T, a), SampledFunction(0.0, T, N), SampledFunction(0.0, T, b), p);
    detail::FrozenStep fs{std::move(N), std::move(ctx), std::abs(eval_g(tg.l0, hold, p))};
    r.interface_hold = true;
    r.g_min_encountered = fs.g_min;
    r.t1 = detail::ramp_end(fs.ctx, T);
    r.h = detail::ramp_for(fs.ctx, tg, r.t1, nu1, eq, o);
    detail::finish_report(r, tg, p, eq, a, b, fs, o);
    return r;
  }

  const double G = dl / T;
  std::vector<double> b(n);
  const double b0 = tg.f0(1.0), b1 = tg.f1(1.0);
  for (std::size_t i = 0; i < n; ++i) b[i] = b0 + (b1 - b0) * static_cast<double>(i) / steps;

  bool converged = false;
  for (int k = 1; k <= o.max_iterations; ++k) {
    const auto fs = detail::freeze(a, b, G, T, p, eq, o);
    r.g_min_encountered = std::min(r.g_min_encountered, fs.g_min);
    const double t1 = detail::ramp_end(fs.ctx, T);
    const ArtificialInflow h = detail::ramp_for(fs.ctx, tg, t1, nu1, eq, o);
    std::vector<double> next = detail::trace_map(fs.ctx, tg.f0, h);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(next[i] - b[i]));
    if (!r.distances.empty()) {
      const double prev = r.distances.back();
      r.contraction_factors.push_back(prev > 0.0 ? d / prev : 0.0);
    }
    r.distances.push_back(d);
    r.iterations = k;
    b = std::move(next);
    if (d <= o.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "control iteration did not reach " << o.tolerance << " in " << o.max_iterations << " iterations (last "
       << r.distances.back() << ")";
    throw Error(ErrorKind::Convergence, os.str());
  }
  const auto fs = detail::freeze(a, b, G, T, p, eq, o);
  r.g_min_encountered = std::min(r.g_min_encountered, fs.g_min);
  r.t1 = detail::ramp_end(fs.ctx, T);
  r.h = detail::ramp_for(fs.ctx, tg, r.t1, nu1, eq, o);
  detail::finish_report(r, tg, p, eq, a, b, fs, o);
  return r;
}

struct ControlCertificate {
  double characteristic_l_error = 0.0;
  double characteristic_f_error = 0.0;
  double upwind_l_error = 0.0;
  double upwind_f_error = 0.0;
  double control_size = 0.0;
  double control_ratio = 0.0;  ///< control_size / nu
  bool interface_hold = false;
};

struct VerifyOptions {
  SolverOptions solver;
  UpwindConfig upwind;
};

inline CauchyData replay_data(const ControlTarget& tg, const SynthesisReport& r, const PhysicalParams& p,
                              const EquilibriumPoint& eq) {
  CauchyData d;
  d.l0 = tg.l0;
  d.f0 = tg.f0;
  d.F_in = r.F_in;
  d.N = r.N;
  d.params = p;
  d.eq = eq;
  return d;
}

/// Replays the controls through both solvers and measures the distance to the target at T.
inline ControlCertificate verify_control(const ControlTarget& tg, const SynthesisReport& r, const PhysicalParams& p,
                                         const EquilibriumPoint& eq, VerifyOptions vo = {}) {
  vo.solver.dt = r.N.step();
  const CauchyData data = replay_data(tg, r, p, eq);
  ControlCertificate c;
  c.interface_hold = r.interface_hold;
  c.control_size = r.control_size;
  c.control_ratio = tg.nu > 0.0 ? r.control_size / tg.nu : std::numeric_limits<double>::infinity();
  try {
    const SemiGlobalSolution sol = solve_semiglobal(data, tg.T, vo.solver);
    c.characteristic_l_error = std::abs(sol.l.values().back() - tg.l1);
    for (double x : sol.field.x_grid()) {
      c.characteristic_f_error = std::max(c.characteristic_f_error, std::abs(sol.value(tg.T, x) - tg.f1(x)));
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::Verification, std::string("characteristic replay failed: ") + e.what());
  }
  try {
    const UpwindResult up = simulate_upwind(data, tg.T, vo.upwind);
    c.upwind_l_error = std::abs(up.l.values().back() - tg.l1);
    for (std::size_t j = 0; j < up.field.nx(); ++j) {
      c.upwind_f_error = std::max(c.upwind_f_error, std::abs(up.field.at(0, j) - tg.f1(up.field.x_grid()[j])));
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::Verification, std::string("upwind replay failed: ") + e.what());
  }
  return c;
}

}  // namespace extrusion

#endif  // EXTRUSION_CONTROL_HPP
