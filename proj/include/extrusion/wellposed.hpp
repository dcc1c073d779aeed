#ifndef EXTRUSION_WELLPOSED_HPP
#define EXTRUSION_WELLPOSED_HPP

/**
 * @file wellposed.hpp
 * @brief Local solution of the coupled transport / interface system by Picard
 *        iteration on the pair (l(t), f_p(t,1)), field assembly by
 *        characteristics, and step-by-step extension to [0, T].
 *
 * The fixed-point map sends a candidate Psi = (l, b) to
 *
 *   l(t) = l0 + int_{t0}^{t} F(l, N, b),
 *   b(t) = f0(beta)             if the characteristic through (t,1) starts at t0,
 *        = inflow(F_in, N)(tau) if it enters through x = 0 at time tau.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "extrusion/characteristics.hpp"
#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/model.hpp"

namespace extrusion {

/// Initial and boundary data of one Cauchy problem, possibly re-rooted at t0 > 0.
struct CauchyData {
  double l0 = 0.0;
  SpaceProfile f0;
  SampledFunction F_in;
  SampledFunction N;
  PhysicalParams params;
  EquilibriumPoint eq;
  double t0 = 0.0;
  /// Points of f0 left of this position were carried in from x = 0 earlier.
  double front = 0.0;

  double inflow(double t) const { return inflow_value(F_in(t), N(t), params); }

  void validate(double compat_tol = 1e-10) const {
    params.validate();
    if (!(l0 > 0.0 && l0 < params.L)) throw Error(ErrorKind::Domain, "initial interface outside (0,L)");
    if (f0.size() < 2) throw Error(ErrorKind::Grid, "initial profile is empty");
    if (!F_in.contains(t0) || !N.contains(t0)) {
      throw Error(ErrorKind::Grid, "feed rate and screw speed must cover the start time");
    }
    for (double v : f0.values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::Domain, "initial filling ratio outside [0,1]");
    }
    const double defect = inflow(t0) - f0(0.0);
    if (std::abs(defect) > compat_tol) {
      std::ostringstream os;
      os << "corner condition F_in/(rho0 V_eff N) = f0(0) violated by " << defect;
      throw Error(ErrorKind::Compatibility, os.str());
    }
  }
};

struct SolverOptions {
  double dt = 1e-3;                ///< trace grid step
  double tolerance = 1e-11;        ///< C0 stopping distance for the Picard iteration
  int max_iterations = 100;
  double delta_safety = 0.5;
  double eps1_fraction = 1.0 / 3.0;
  std::optional<double> eps1;      ///< overrides eps1_fraction * eps1_bound
  BoxNormOptions box;
  double dx = 1e-3;                ///< x grid of assembled fields and re-rooted profiles
  std::size_t output_stride = 10;  ///< field rows every output_stride trace steps

  double resolve_eps1(const EquilibriumPoint& eq, const PhysicalParams& p) const {
    return eps1 ? *eps1 : eps1_fraction * eps1_bound(eq, p);
  }
};

/// Candidate (l, f_p(.,1)) on the nodes of one local grid.
struct TraceCandidate {
  std::vector<double> l;
  std::vector<double> b;
};

inline double c0_distance(const TraceCandidate& a, const TraceCandidate& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.l.size(); ++i) {
    d = std::max({d, std::abs(a.l[i] - b.l[i]), std::abs(a.b[i] - b.b[i])});
  }
  return d;
}

struct LocalSolveReport {
  double t_start = 0.0;
  double delta = 0.0;
  int iterations = 0;
  std::vector<double> distances;
  std::vector<double> contraction_factors;
  double residual = 0.0;
  TraceContext trace;  ///< (l, N, b) at the fixed point

  const SampledFunction& l() const noexcept { return trace.l(); }
  const SampledFunction& b() const noexcept { return trace.b(); }
};

namespace detail {

inline TraceContext make_context(const CauchyData& data, double t_end, const TraceCandidate& c) {
  const std::size_t n = c.l.size();
  std::vector<double> N(n);
  const double h = (t_end - data.t0) / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) N[j] = data.N(j + 1 == n ? t_end : data.t0 + h * static_cast<double>(j));
  return TraceContext(SampledFunction(data.t0, t_end, c.l), SampledFunction(data.t0, t_end, std::move(N)),
                      SampledFunction(data.t0, t_end, c.b), data.params);
}

inline double origin_value(const Origin& o, const CauchyData& data) {
  if (o.from_initial()) return data.f0(std::clamp(o.coordinate, 0.0, 1.0));
  return data.inflow(o.coordinate);
}

inline Provenance origin_tag(const Origin& o, const CauchyData& data) {
  if (!o.from_initial()) return Provenance::FromBoundary;
  return o.coordinate < data.front ? Provenance::FromBoundary : Provenance::FromInitial;
}

/// One application of the fixed-point map.
inline TraceCandidate apply_map(const CauchyData& data, double t_end, const TraceCandidate& c) {
  const TraceContext ctx = make_context(data, t_end, c);
  const std::size_t n = c.l.size();
  TraceCandidate out{std::vector<double>(n), std::vector<double>(n)};
  out.l[0] = data.l0;
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double a = ctx.node(j), b = ctx.node(j + 1);
    acc += (b - a) / 6.0 * (ctx.F(a) + 4.0 * ctx.F(0.5 * (a + b)) + ctx.F(b));
    out.l[j + 1] = data.l0 + acc;
  }
  for (std::size_t j = 0; j < n; ++j) out.b[j] = origin_value(backtrace(ctx.node(j), 1.0, ctx), data);
  return out;
}

inline TraceCandidate constant_candidate(const CauchyData& data, std::size_t n) {
  return {std::vector<double>(n, data.l0), std::vector<double>(n, data.f0(1.0))};
}

inline void require_in_ball(const TraceCandidate& c, const EquilibriumPoint& eq, double eps1, int iteration) {
  for (std::size_t i = 0; i < c.l.size(); ++i) {
    if (std::abs(c.l[i] - eq.l_e) > eps1 || std::abs(c.b[i] - eq.f_pe) > eps1) {
      std::ostringstream os;
      os << "iterate " << iteration << " leaves the ball of radius " << eps1 << " around the equilibrium (l="
         << c.l[i] << ", f_p(t,1)=" << c.b[i] << ")";
      throw Error(ErrorKind::Divergence, os.str());
    }
  }
}

}  // namespace detail

/// safety * min{T, (l_e - eps1)/(zeta (N_e + eps1)), (l_e - eps1)/|F|, (L - l_e - eps1)/|F|}.
inline double delta_bound(const PhysicalParams& p, const EquilibriumPoint& eq, double eps1, double T,
                          double F_norm, double safety = 0.5) {
  double m = std::min(T, (eq.l_e - eps1) / (p.zeta * (eq.N_e + eps1)));
  if (F_norm > 0.0) m = std::min({m, (eq.l_e - eps1) / F_norm, (p.L - eq.l_e - eps1) / F_norm});
  return safety * m;
}

/**
 * Step of validity for one local solve: the a-priori bound, rounded down to
 * the trace grid and halved until the measured contraction of the first two
 * Picard iterates is at most 1/2.
 */
inline double compute_delta(const CauchyData& data, double eps1, double T, const SolverOptions& opts,
                            std::optional<double> F_norm = std::nullopt) {
  if (!(eps1 > 0.0 && eps1 < eps1_bound(data.eq, data.params))) {
    throw Error(ErrorKind::Domain, "eps1 must lie strictly inside (0, eps1_bound)");
  }
  const double norm = F_norm ? *F_norm : norm_F_box(data.params, data.eq, eps1, opts.box);
  double delta = delta_bound(data.params, data.eq, eps1, T, norm, opts.delta_safety);
  delta = std::floor(delta / opts.dt + 1e-9) * opts.dt;
  while (delta >= opts.dt * (1.0 - 1e-9)) {
    const std::size_t n = static_cast<std::size_t>(std::llround(delta / opts.dt)) + 1;
    const double t_end = data.t0 + delta;
    const auto psi0 = detail::constant_candidate(data, n);
    const auto psi1 = detail::apply_map(data, t_end, psi0);
    const double d1 = c0_distance(psi0, psi1);
    if (d1 == 0.0) return delta;
    const auto psi2 = detail::apply_map(data, t_end, psi1);
    if (c0_distance(psi1, psi2) <= 0.5 * d1) return delta;
    delta = std::floor(0.5 * delta / opts.dt + 1e-9) * opts.dt;
  }
  std::ostringstream os;
  os << "admissible step falls below the grid step dt=" << opts.dt;
  throw Error(ErrorKind::Resolution, os.str());
}

/// Picard iteration of the fixed-point map on [t0, t0 + delta].
inline LocalSolveReport local_fixed_point(const CauchyData& data, double delta, const SolverOptions& opts,
                                          const std::optional<TraceCandidate>& initial = std::nullopt) {
  data.validate();
  const std::size_t n = intervals_for(delta, opts.dt) + 1;
  const double t_end = data.t0 + delta;
  const double eps1 = opts.resolve_eps1(data.eq, data.params);

  TraceCandidate psi = initial ? *initial : detail::constant_candidate(data, n);
  if (psi.l.size() != n || psi.b.size() != n) throw Error(ErrorKind::Grid, "initial candidate has wrong size");

  LocalSolveReport rep{data.t0, delta, 0, {}, {}, 0.0, detail::make_context(data, t_end, psi)};
  bool converged = false;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    TraceCandidate next = detail::apply_map(data, t_end, psi);
    detail::require_in_ball(next, data.eq, eps1, k);
    const double d = c0_distance(psi, next);
    if (!rep.distances.empty()) {
      const double prev = rep.distances.back();
      rep.contraction_factors.push_back(prev > 0.0 ? d / prev : 0.0);
    }
    rep.distances.push_back(d);
    rep.iterations = k;
    psi = std::move(next);
    if (d <= opts.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "Picard iteration did not reach " << opts.tolerance << " in " << opts.max_iterations << " iterations";
    throw Error(ErrorKind::Convergence, os.str());
  }
  rep.residual = c0_distance(psi, detail::apply_map(data, t_end, psi));
  rep.trace = detail::make_context(data, t_end, psi);
  return rep;
}

/// f_p on a (t, x) grid inside the validity interval of a local solve.
inline SolutionField assemble_field(const LocalSolveReport& report, const CauchyData& data,
                                    const std::vector<double>& t_grid, const std::vector<double>& x_grid) {
  SolutionField field(t_grid, x_grid);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      const Origin o = backtrace(t_grid[i], x_grid[j], report.trace);
      field.at(i, j) = detail::origin_value(o, data);
      field.origin(i, j) = detail::origin_tag(o, data);
    }
  }
  return field;
}

struct SemiGlobalSolution {
  SampledFunction l;                      ///< interface on the global trace grid
  SampledFunction b;                      ///< f_p(t,1) on the global trace grid
  SampledFunction N;                      ///< screw speed sampled on the same grid
  SolutionField field;                    ///< f_p on the output grid
  std::vector<LocalSolveReport> reports;  ///< one per segment
  std::vector<CauchyData> segments;       ///< re-rooted data of each segment

  /// Coefficients of the whole run as one trace.
  TraceContext trace() const { return TraceContext(l, N, b, segments.front().params); }

  /// f_p at an arbitrary (t, x), evaluated in the segment owning t.
  double value(double t, double x) const {
    const std::size_t k = segment_of(t);
    return detail::origin_value(backtrace(t, x, reports[k].trace), segments[k]);
  }

  std::size_t segment_of(double t) const {
    for (std::size_t k = 0; k < reports.size(); ++k) {
      if (t <= reports[k].t_start + reports[k].delta + 1e-12) return k;
    }
    return reports.size() - 1;
  }
};

/**
 * Chains local solves over [0, T]. At each junction the new Cauchy data are
 * (l(t_k), f_p(t_k, .)) with the profile sampled on the dx grid.
 */
inline SemiGlobalSolution solve_semiglobal(const CauchyData& data, double T, const SolverOptions& opts) {
  data.validate();
  if (!(T > 0.0)) throw Error(ErrorKind::Argument, "horizon T must be positive");
  const std::size_t total_steps = intervals_for(T, opts.dt);
  const std::size_t nx = intervals_for(1.0, opts.dx);
  const std::vector<double> x_grid = uniform_grid(0.0, 1.0, nx);
  const double eps1 = opts.resolve_eps1(data.eq, data.params);
  if (!(eps1 > 0.0 && eps1 < eps1_bound(data.eq, data.params))) {
    throw Error(ErrorKind::Domain, "eps1 must lie strictly inside (0, eps1_bound)");
  }
  const double F_norm = norm_F_box(data.params, data.eq, eps1, opts.box);

  SemiGlobalSolution sol;
  std::vector<double> l_all{data.l0}, b_all{data.f0(1.0)}, N_all{data.N(data.t0)};
  CauchyData seg = data;
  std::size_t done = 0;
  while (done < total_steps) {
    // Horizon term scaled so that the safety factor cannot cut a segment below the rest of [0, T].
    const double remaining = T - static_cast<double>(done) * opts.dt;
    double delta = 0.0;
    try {
      delta = compute_delta(seg, eps1, remaining / opts.delta_safety, opts, F_norm);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "segment " << sol.reports.size() << ": " << e.what();
      throw Error(e.kind(), os.str());
    }
    auto steps = std::min<std::size_t>(static_cast<std::size_t>(std::llround(delta / opts.dt)), total_steps - done);
    delta = static_cast<double>(steps) * opts.dt;
    LocalSolveReport rep = [&] {
      try {
        return local_fixed_point(seg, delta, opts);
      } catch (const Error& e) {
        std::ostringstream os;
        os << "segment " << sol.reports.size() << ": " << e.what();
        throw Error(e.kind(), os.str());
      }
    }();
    done += steps;
    const double t_b = done == total_steps ? data.t0 + T : data.t0 + static_cast<double>(done) * opts.dt;

    std::vector<double> slice(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      slice[j] = detail::origin_value(backtrace(rep.trace.t_end(), x_grid[j], rep.trace), seg);
    }
    for (std::size_t j = 1; j < rep.l().size(); ++j) {
      l_all.push_back(rep.l()[j]);
      b_all.push_back(j + 1 == rep.l().size() ? slice.back() : rep.b()[j]);
      N_all.push_back(rep.trace.N()[j]);
    }
    CauchyData next = seg;
    next.l0 = rep.l().values().back();
    next.f0 = SpaceProfile(slice);
    next.t0 = t_b;
    next.front = seg.front > 1.0 ? seg.front : rep.trace.position(rep.trace.t_end(), seg.t0, seg.front);
    sol.reports.push_back(std::move(rep));
    sol.segments.push_back(seg);
    seg = std::move(next);
  }
  sol.l = SampledFunction(data.t0, data.t0 + T, std::move(l_all));
  sol.b = SampledFunction(data.t0, data.t0 + T, std::move(b_all));
  sol.N = SampledFunction(data.t0, data.t0 + T, std::move(N_all));

  std::vector<double> t_grid;
  const std::size_t stride = std::max<std::size_t>(1, opts.output_stride);
  for (std::size_t i = 0; i < total_steps; i += stride) t_grid.push_back(sol.l.node(i));
  t_grid.push_back(sol.l.end());
  sol.field = SolutionField(t_grid, x_grid);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const std::size_t k = sol.segment_of(t_grid[i]);
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      const Origin o = backtrace(t_grid[i], x_grid[j], sol.reports[k].trace);
      sol.field.at(i, j) = detail::origin_value(o, sol.segments[k]);
      sol.field.origin(i, j) = detail::origin_tag(o, sol.segments[k]);
    }
  }
  return sol;
}

/// Size of the data's deviation from equilibrium in the W^{1,inf} sense used by the estimates.
inline double data_deviation(const CauchyData& data, double T, double dt) {
  const auto& eq = data.eq;
  const auto f0_dev = map_values(static_cast<const UniformSamples<SpaceAxis>&>(data.f0),
                                 [&](double v) { return v - eq.f_pe; });
  const std::size_t n = intervals_for(T, dt) + 1;
  const auto ratio_dev = SampledFunction::from_function(data.t0, data.t0 + T, n,
                                                        [&](double t) { return data.inflow(t) - eq.f_pe; });
  double n_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) n_dev = std::max(n_dev, std::abs(data.N(ratio_dev.node(i)) - eq.N_e));
  return std::abs(data.l0 - eq.l_e) + norm(NormKind::W1inf, f0_dev) + norm(NormKind::W1inf, ratio_dev) + n_dev;
}

/// Same with H^2 norms on the profile and the inflow ratio.
inline double data_deviation_h2(const CauchyData& data, double T, double dt) {
  const auto& eq = data.eq;
  const auto f0_dev = map_values(static_cast<const UniformSamples<SpaceAxis>&>(data.f0),
                                 [&](double v) { return v - eq.f_pe; });
  const std::size_t n = intervals_for(T, dt) + 1;
  const auto ratio_dev = SampledFunction::from_function(data.t0, data.t0 + T, n,
                                                        [&](double t) { return data.inflow(t) - eq.f_pe; });
  double n_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) n_dev = std::max(n_dev, std::abs(data.N(ratio_dev.node(i)) - eq.N_e));
  return std::abs(data.l0 - eq.l_e) + norm(NormKind::H2, f0_dev) + norm(NormKind::H2, ratio_dev) + n_dev;
}

struct EstimateAudit {
  double eps = 0.0;
  double l_ratio = 0.0;          ///< |l - l_e|_{W1,inf} / eps
  double f_ratio = 0.0;          ///< |f_p - f_pe|_{W1,inf} / eps over the field grid
  double h2_ratio = 0.0;         ///< max_t |f_p(t,.) - f_pe|_{H2} / eps
  double max_deviation = 0.0;    ///< max |f_p - f_pe|
  bool linf_within_eps = true;   ///< |f_p(t,.) - f_pe|_{Linf} <= eps for every t
  bool degenerate = false;       ///< eps == 0
};

inline EstimateAudit check_estimates(const SemiGlobalSolution& sol, const EquilibriumPoint& eq, double eps) {
  EstimateAudit a;
  a.eps = eps;
  const auto l_dev = map_values(sol.l, [&](double v) { return v - eq.l_e; });
  const double l_norm = norm(NormKind::W1inf, l_dev);

  const auto& f = sol.field;
  double dev = 0.0, slope = 0.0, h2 = 0.0;
  for (std::size_t i = 0; i < f.nt(); ++i) {
    std::vector<double> row(f.nx());
    for (std::size_t j = 0; j < f.nx(); ++j) {
      row[j] = f.at(i, j) - eq.f_pe;
      dev = std::max(dev, std::abs(row[j]));
      if (j + 1 < f.nx()) {
        slope = std::max(slope, std::abs(f.at(i, j + 1) - f.at(i, j)) / (f.x_grid()[j + 1] - f.x_grid()[j]));
      }
      if (i + 1 < f.nt()) {
        slope = std::max(slope, std::abs(f.at(i + 1, j) - f.at(i, j)) / (f.t_grid()[i + 1] - f.t_grid()[i]));
      }
    }
    if (f.nx() >= 3) h2 = std::max(h2, norm(NormKind::H2, SpaceProfile(std::move(row))));
  }
  a.max_deviation = dev;
  a.linf_within_eps = dev <= eps * (1.0 + 1e-12) + 1e-15;
  if (eps == 0.0) {
    a.degenerate = true;
    return a;
  }
  a.l_ratio = l_norm / eps;
  a.f_ratio = std::max(dev, slope) / eps;
  a.h2_ratio = h2 / eps;
  return a;
}

/// Largest relative change of the estimate ratios between two runs of the same shape.
inline double ratio_drift(const EstimateAudit& a, const EstimateAudit& b) {
  auto rel = [](double x, double y) {
    const double s = std::max(std::abs(x), std::abs(y));
    return s == 0.0 ? 0.0 : std::abs(x - y) / s;
  };
  return std::max(rel(a.l_ratio, b.l_ratio), rel(a.f_ratio, b.f_ratio));
}

}  // namespace extrusion

#endif  // EXTRUSION_WELLPOSED_HPP
