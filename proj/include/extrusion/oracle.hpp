#ifndef EXTRUSION_ORACLE_HPP
#define EXTRUSION_ORACLE_HPP

/**
 * @file oracle.hpp
 * @brief First-order upwind reference solver for the coupled system, used to
 *        cross-check the characteristic solver, and a grid-refinement study.
 *
 * Nodes x_j = j dx carry f_p; node 0 holds the inflow ratio. Each step
 *
 *   f_j <- f_j - (dt/dx) alpha_p(x_j) (f_j - f_{j-1}),   l <- l + dt F(l, N, f_M),
 *
 * with dt = cfl dx / max alpha_p, shortened to land on requested times.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/model.hpp"
#include "extrusion/wellposed.hpp"

namespace extrusion {

struct UpwindConfig {
  double dx = 1e-3;
  double cfl = 0.9;
  /// l and f_p(t,1) are recorded on a uniform grid with this many intervals.
  std::size_t trace_intervals = 1000;

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) {
      std::ostringstream os;
      os << "Courant number " << cfl << " outside (0,1]";
      throw Error(ErrorKind::Config, os.str());
    }
    const double r = 1.0 / dx;
    if (!(dx > 0.0) || std::abs(r - std::round(r)) > 1e-12 * r) {
      std::ostringstream os;
      os << "cell width " << dx << " does not divide [0,1]";
      throw Error(ErrorKind::Config, os.str());
    }
    if (trace_intervals < 1) throw Error(ErrorKind::Config, "trace needs at least one interval");
  }
};

struct UpwindResult {
  SampledFunction l;
  SampledFunction b;  ///< f_p(t,1)
  SolutionField field;
  std::size_t steps = 0;
  double data_min = 0.0;  ///< bounds of initial and boundary values seen
  double data_max = 0.0;
};

/**
 * Runs the scheme on [t0, t0 + T]. Field rows are written at each requested
 * output time (default: the final time); provenance follows an Euler-tracked
 * front leaving (t0, 0).
 */
inline UpwindResult simulate_upwind(const CauchyData& data, double T, const UpwindConfig& cfg,
                                    std::vector<double> output_times = {}) {
  cfg.validate();
  data.validate();
  if (!(T > 0.0)) throw Error(ErrorKind::Argument, "horizon T must be positive");
  const auto& p = data.params;
  const std::size_t M = static_cast<std::size_t>(std::llround(1.0 / cfg.dx));
  const std::vector<double> x_grid = uniform_grid(0.0, 1.0, M);
  const double t_begin = data.t0, t_final = data.t0 + T;
  if (output_times.empty()) output_times.push_back(t_final);
  std::sort(output_times.begin(), output_times.end());
  for (double t : output_times) {
    if (t < t_begin - 1e-12 || t > t_final + 1e-12) throw Error(ErrorKind::Argument, "output time outside the run");
  }

  std::vector<double> u(M + 1);
  for (std::size_t j = 0; j <= M; ++j) u[j] = data.f0(x_grid[j]);
  double lo = *std::min_element(u.begin(), u.end());
  double hi = *std::max_element(u.begin(), u.end());

  UpwindResult res;
  res.field = SolutionField(output_times, x_grid);
  std::vector<double> l_trace{data.l0}, b_trace{u[M]};
  const std::size_t nt = cfg.trace_intervals;
  auto trace_time = [&](std::size_t k) {
    return k == nt ? t_final : t_begin + T * static_cast<double>(k) / static_cast<double>(nt);
  };

  double t = t_begin, l = data.l0, front = 0.0;
  std::size_t next_trace = 1, next_out = 0;
  auto write_row = [&](std::size_t i) {
    for (std::size_t j = 0; j <= M; ++j) {
      res.field.at(i, j) = u[j];
      res.field.origin(i, j) = x_grid[j] < front ? Provenance::FromBoundary : Provenance::FromInitial;
    }
  };
  while (next_out < output_times.size() && output_times[next_out] <= t_begin + 1e-12) write_row(next_out++);

  std::vector<double> un(M + 1);
  while (next_trace <= nt || next_out < output_times.size()) {
    const double N = data.N(t);
    const double a0 = eval_alpha_p(0.0, N, l, u[M], p);
    const double a1 = eval_alpha_p(1.0, N, l, u[M], p);
    if (!(a0 > 0.0 && a1 > 0.0)) {
      std::ostringstream os;
      os << "transport speed lost positivity at t=" << t << " (alpha(0)=" << a0 << ", alpha(1)=" << a1 << ")";
      throw Error(ErrorKind::SchemeInvalid, os.str());
    }
    double target = next_trace <= nt ? trace_time(next_trace) : t_final;
    if (next_out < output_times.size()) target = std::min(target, output_times[next_out]);
    double dt = cfg.cfl * cfg.dx / std::max(a0, a1);
    if (!(dt > 1e-14 * std::max(1.0, std::abs(t)))) {
      std::ostringstream os;
      os << "time step collapsed at t=" << t << " (l=" << l << ")";
      throw Error(ErrorKind::SchemeInvalid, os.str());
    }
    bool land = false;
    if (t + dt >= target - 1e-14 * std::max(1.0, std::abs(target))) {
      dt = target - t;
      land = true;
    }
    const double F = eval_F(l, N, u[M], p);
    const double lambda = dt / cfg.dx;
    for (std::size_t j = 1; j <= M; ++j) {
      const double a = (p.zeta * N - x_grid[j] * F) / l;
      un[j] = u[j] - lambda * a * (u[j] - u[j - 1]);
    }
    front = std::min(2.0, front + dt * (p.zeta * N - front * F) / l);
    l += dt * F;
    t = land ? target : t + dt;
    un[0] = data.inflow(t);
    lo = std::min(lo, un[0]);
    hi = std::max(hi, un[0]);
    u.swap(un);
    ++res.steps;

    const double slack = 1e-12 * std::max(1.0, std::abs(hi));
    for (std::size_t j = 0; j <= M; ++j) {
      if (u[j] < lo - slack || u[j] > hi + slack) {
        std::ostringstream os;
        os << "maximum principle violated at t=" << t << ", x=" << x_grid[j] << " (value " << u[j] << ")";
        throw Error(ErrorKind::SchemeInvalid, os.str());
      }
    }
    if (!(l > 0.0 && l < p.L)) {
      std::ostringstream os;
      os << "interface left (0,L) at t=" << t << " (l=" << l << ")";
      throw Error(ErrorKind::SchemeInvalid, os.str());
    }
    if (land) {
      while (next_trace <= nt && trace_time(next_trace) <= t + 1e-14) {
        l_trace.push_back(l);
        b_trace.push_back(u[M]);
        ++next_trace;
      }
      while (next_out < output_times.size() && output_times[next_out] <= t + 1e-14) write_row(next_out++);
    }
  }
  res.l = SampledFunction(t_begin, t_final, std::move(l_trace));
  res.b = SampledFunction(t_begin, t_final, std::move(b_trace));
  res.data_min = lo;
  res.data_max = hi;
  return res;
}

struct ConvergenceStudy {
  std::vector<double> dx;
  std::vector<double> errors;  ///< L-infinity gap to the reference at the final time
  std::vector<double> orders;  ///< between consecutive grids
  double order = 0.0;          ///< from the two finest grids
  bool inconclusive = false;   ///< errors not decreasing
  bool degenerate = false;     ///< all errors at rounding level
};

/**
 * Observed order of the upwind scheme against the characteristic solution at
 * the final time. Needs at least three grids, each half the previous.
 */
inline ConvergenceStudy convergence_study(const CauchyData& data, double T, const std::vector<double>& dx_sequence,
                                          const SolverOptions& reference_opts = {}, double cfl = 0.9) {
  if (dx_sequence.size() < 3) throw Error(ErrorKind::Argument, "convergence study needs at least three grids");
  for (std::size_t k = 1; k < dx_sequence.size(); ++k) {
    if (std::abs(dx_sequence[k] * 2.0 - dx_sequence[k - 1]) > 1e-12 * dx_sequence[k - 1]) {
      throw Error(ErrorKind::Argument, "each grid must halve the previous cell width");
    }
  }
  const SemiGlobalSolution ref = solve_semiglobal(data, T, reference_opts);
  const double t_final = data.t0 + T;

  ConvergenceStudy st;
  st.dx = dx_sequence;
  for (double dx : dx_sequence) {
    UpwindConfig cfg;
    cfg.dx = dx;
    cfg.cfl = cfl;
    cfg.trace_intervals = 1;  // landing on a fine trace grid would cap the step and blur the order
    const UpwindResult up = simulate_upwind(data, T, cfg);
    double err = 0.0;
    for (std::size_t j = 0; j < up.field.nx(); ++j) {
      err = std::max(err, std::abs(up.field.at(0, j) - ref.value(t_final, up.field.x_grid()[j])));
    }
    st.errors.push_back(err);
  }
  const double floor = 1e-13;
  st.degenerate = std::all_of(st.errors.begin(), st.errors.end(), [&](double e) { return e <= floor; });
  if (st.degenerate) return st;
  for (std::size_t k = 1; k < st.errors.size(); ++k) {
    if (!(st.errors[k] < st.errors[k - 1])) st.inconclusive = true;
    st.orders.push_back(std::log(st.errors[k - 1] / st.errors[k]) / std::log(st.dx[k - 1] / st.dx[k]));
  }
  st.order = st.orders.back();
  return st;
}

}  // namespace extrusion

#endif  // EXTRUSION_ORACLE_HPP
