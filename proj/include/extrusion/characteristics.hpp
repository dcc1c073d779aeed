#ifndef EXTRUSION_CHARACTERISTICS_HPP
#define EXTRUSION_CHARACTERISTICS_HPP

/**
 * @file characteristics.hpp
 * @brief Characteristic curves of f_t + alpha_p f_x = 0 for a given boundary trace.
 *
 * With q(s) = F(s)/l(s) and p(s) = zeta N(s)/l(s) the characteristic ODE
 * d xi/ds = p(s) - q(s) xi is linear, so
 *
 *   xi(s; t, x) = exp(-Q(s)) [x exp(Q(t)) - (P(t) - P(s))],
 *   Q(s) = int_{t0}^{s} q,   P(s) = int_{t0}^{s} p exp(Q).
 *
 * Q and P are accumulated by composite Simpson on the trace grid (one Simpson
 * panel per cell, partial panels for off-grid arguments). The quantity
 * xi exp(Q) - P is conserved along every characteristic, which makes the
 * semigroup property hold to rounding.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/model.hpp"

namespace extrusion {

/// Coefficient data (l, N, f_p(.,1)) on one time grid.
class TraceContext {
 public:
  TraceContext(SampledFunction l, SampledFunction N, SampledFunction b, PhysicalParams params)
      : l_(std::move(l)), N_(std::move(N)), b_(std::move(b)), params_(params) {
    if (l_.size() != N_.size() || l_.size() != b_.size() || l_.start() != N_.start() ||
        l_.start() != b_.start() || l_.end() != N_.end() || l_.end() != b_.end()) {
      throw Error(ErrorKind::Grid, "trace functions l, N, b must share one time grid");
    }
    const std::size_t n = l_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(l_[i] > 0.0 && l_[i] < params_.L)) {
        std::ostringstream os;
        os << "trace l=" << l_[i] << " at t=" << l_.node(i) << " leaves (0,L)";
        throw Error(ErrorKind::InvariantViolation, os.str());
      }
      if (!(b_[i] >= 0.0 && b_[i] < 1.0)) {
        std::ostringstream os;
        os << "trace f_p(t,1)=" << b_[i] << " at t=" << b_.node(i) << " leaves [0,1)";
        throw Error(ErrorKind::InvariantViolation, os.str());
      }
    }
    // alpha_p is affine in x, so positivity at x = 0 and x = 1 covers [0,1].
    auto check_speed = [this](double s) {
      const double a0 = alpha(s, 0.0), a1 = alpha(s, 1.0);
      if (!(a0 > 0.0 && a1 > 0.0)) {
        std::ostringstream os;
        os << "transport speed not positive at t=" << s << " (alpha(0)=" << a0 << ", alpha(1)=" << a1 << ")";
        throw Error(ErrorKind::InvariantViolation, os.str());
      }
    };
    Q_.assign(n, 0.0);
    P_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      check_speed(l_.node(i));
      if (i + 1 < n) check_speed(0.5 * (l_.node(i) + l_.node(i + 1)));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      Q_[i + 1] = Q_in_cell(i, l_.node(i + 1));
      P_[i + 1] = P_in_cell(i, l_.node(i + 1));
      if (!(P_[i + 1] > P_[i])) {
        throw Error(ErrorKind::InvariantViolation, "characteristic potential is not increasing");
      }
    }
  }

  /// Constant coefficients (l_e, N_e, f_pe) on [t_start, t_end].
  static TraceContext equilibrium(const PhysicalParams& p, const EquilibriumPoint& eq, double t_start,
                                  double t_end, std::size_t intervals) {
    const std::size_t n = intervals + 1;
    return TraceContext(SampledFunction::constant(t_start, t_end, n, eq.l_e),
                        SampledFunction::constant(t_start, t_end, n, eq.N_e),
                        SampledFunction::constant(t_start, t_end, n, eq.f_pe), p);
  }

  double t_start() const noexcept { return l_.start(); }
  double t_end() const noexcept { return l_.end(); }
  double step() const noexcept { return l_.step(); }
  std::size_t size() const noexcept { return l_.size(); }
  double node(std::size_t i) const noexcept { return l_.node(i); }
  const SampledFunction& l() const noexcept { return l_; }
  const SampledFunction& N() const noexcept { return N_; }
  const SampledFunction& b() const noexcept { return b_; }
  const PhysicalParams& params() const noexcept { return params_; }

  double F(double s) const {
    const auto c = coeffs(s);
    return eval_F(c.l, c.N, c.b, params_);
  }

  double alpha(double s, double x) const {
    const auto c = coeffs(s);
    return eval_alpha_p(x, c.N, c.l, c.b, params_);
  }

  /// int_{t_start}^{s} F/l.
  double Q(double s) const {
    require_inside(s);
    return Q_in_cell(l_.cell(s), s);
  }

  /// int_{t_start}^{s} (zeta N / l) exp(Q).
  double P(double s) const {
    require_inside(s);
    return P_in_cell(l_.cell(s), s);
  }

  /// Closed-form characteristic position at time s of the curve through (t, x); any order of s, t.
  double position(double s, double t, double x) const {
    const double invariant = x * std::exp(Q(t)) - P(t);
    return std::exp(-Q(s)) * (invariant + P(s));
  }

  void require_inside(double s) const {
    if (!l_.contains(s)) {
      std::ostringstream os;
      os << "time " << s << " outside trace interval [" << t_start() << ", " << t_end() << "]";
      throw Error(ErrorKind::Grid, os.str());
    }
  }

  /// Node potentials, exposed for root bracketing.
  const std::vector<double>& P_nodes() const noexcept { return P_; }

 private:
  struct Coeffs {
    double l, N, b;
  };

  Coeffs coeffs(double s) const {
    const std::size_t i = l_.cell(s);
    const double w = (s - l_.node(i)) / l_.step();
    return {(1.0 - w) * l_[i] + w * l_[i + 1], (1.0 - w) * N_[i] + w * N_[i + 1],
            (1.0 - w) * b_[i] + w * b_[i + 1]};
  }

  double q(double s) const {
    const auto c = coeffs(s);
    return eval_F(c.l, c.N, c.b, params_) / c.l;
  }

  double p(double s) const {
    const auto c = coeffs(s);
    return params_.zeta * c.N / c.l;
  }

  double Q_in_cell(std::size_t i, double s) const {
    const double a = l_.node(i);
    const double h = s - a;
    if (h == 0.0) return Q_[i];
    return Q_[i] + h / 6.0 * (q(a) + 4.0 * q(a + 0.5 * h) + q(s));
  }

  double P_in_cell(std::size_t i, double s) const {
    const double a = l_.node(i);
    const double h = s - a;
    if (h == 0.0) return P_[i];
    const double m = a + 0.5 * h;
    return P_[i] + h / 6.0 *
                       (p(a) * std::exp(Q_[i]) + 4.0 * p(m) * std::exp(Q_in_cell(i, m)) +
                        p(s) * std::exp(Q_in_cell(i, s)));
  }

  SampledFunction l_;
  SampledFunction N_;
  SampledFunction b_;
  PhysicalParams params_;
  std::vector<double> Q_;
  std::vector<double> P_;
};

/// xi(s; t, x) for s <= t (backward in time along the characteristic through (t, x)).
inline double xi(double s, double t, double x, const TraceContext& ctx) {
  if (s > t) throw Error(ErrorKind::Argument, "xi expects s <= t; use xi_forward");
  ctx.require_inside(s);
  ctx.require_inside(t);
  if (s == t) return x;
  return ctx.position(s, t, x);
}

/// Position at t_to >= t_from of the characteristic leaving (t_from, x).
inline double xi_forward(double t_from, double x, double t_to, const TraceContext& ctx) {
  if (t_to < t_from) throw Error(ErrorKind::Argument, "xi_forward expects t_to >= t_from");
  ctx.require_inside(t_from);
  ctx.require_inside(t_to);
  if (t_to == t_from) return x;
  return ctx.position(t_to, t_from, x);
}

namespace detail {

inline double rk4_step(const TraceContext& ctx, double s, double x, double h) {
  const double k1 = ctx.alpha(s, x);
  const double k2 = ctx.alpha(s + 0.5 * h, x + 0.5 * h * k1);
  const double k3 = ctx.alpha(s + 0.5 * h, x + 0.5 * h * k2);
  const double k4 = ctx.alpha(s + h, x + h * k3);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Step boundaries from a to b that hit every grid node in between.
inline std::vector<double> aligned_steps(const TraceContext& ctx, double a, double b) {
  std::vector<double> pts{a};
  if (a == b) return pts;
  const double h = ctx.step();
  const double t0 = ctx.t_start();
  const double eps = 1e-9 * h;
  if (b > a) {
    auto k = static_cast<long long>(std::floor((a - t0) / h + 1e-9)) + 1;
    for (double s = t0 + h * k; s < b - eps; s = t0 + h * (++k)) {
      if (s > a + eps) pts.push_back(s);
    }
  } else {
    auto k = static_cast<long long>(std::ceil((a - t0) / h - 1e-9)) - 1;
    for (double s = t0 + h * k; s > b + eps; s = t0 + h * (--k)) {
      if (s < a - eps) pts.push_back(s);
    }
  }
  pts.push_back(b);
  return pts;
}

}  // namespace detail

/// Classical RK4 integration of d xi/ds = alpha_p from (t, x) to time s, steps aligned to the trace grid.
inline double xi_rk4(double s, double t, double x, const TraceContext& ctx) {
  ctx.require_inside(s);
  ctx.require_inside(t);
  const auto pts = detail::aligned_steps(ctx, t, s);
  double y = x;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) y = detail::rk4_step(ctx, pts[k], y, pts[k + 1] - pts[k]);
  return y;
}

/// Where the characteristic through (t, x) enters the domain.
struct Origin {
  Provenance source = Provenance::FromInitial;
  double coordinate = 0.0;  ///< beta (position at t_start) or tau (entry time at x = 0)

  bool from_initial() const noexcept { return source == Provenance::FromInitial; }
};

inline Origin backtrace(double t, double x, const TraceContext& ctx) {
  ctx.require_inside(t);
  const double Qt = ctx.Q(t);
  const double Pt = ctx.P(t);
  const double invariant = x * std::exp(Qt) - Pt;
  if (invariant >= 0.0) return {Provenance::FromInitial, invariant};

  // xi(tau) = 0  <=>  P(tau) = P(t) - x exp(Q(t)); P is strictly increasing.
  const double target = -invariant;
  const auto& Pn = ctx.P_nodes();
  const std::size_t cell_t = ctx.l().cell(t);
  auto it = std::upper_bound(Pn.begin(), Pn.begin() + static_cast<long>(cell_t) + 1, target);
  std::size_t k = static_cast<std::size_t>(std::max<long>(0, (it - Pn.begin()) - 1));
  double lo = ctx.node(k);
  // cell(t) may round one node low, so the last bracket always ends at t itself.
  double hi = k >= cell_t ? t : std::min(t, ctx.node(k + 1));
  double P_lo = ctx.P(lo), P_hi = ctx.P(hi);
  const double slack = 1e-13 * (1.0 + std::abs(target));
  if (!(P_lo - slack <= target && target <= P_hi + slack)) {
    throw Error(ErrorKind::InvariantViolation, "characteristic is not monotone in time");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ctx.P(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double tau = std::abs(ctx.P(lo) - target) <= std::abs(ctx.P(hi) - target) ? lo : hi;
  return {Provenance::FromBoundary, tau};
}

/// d tau / dx = -l(tau)/(zeta N(tau)) exp(int_tau^t F/l) for boundary-origin points.
inline double dtau_dx(double t, double x, const TraceContext& ctx) {
  const Origin o = backtrace(t, x, ctx);
  if (o.from_initial()) throw Error(ErrorKind::Argument, "dtau_dx requires a boundary-origin point");
  const double tau = o.coordinate;
  return -ctx.l()(tau) / (ctx.params().zeta * ctx.N()(tau)) * std::exp(ctx.Q(t) - ctx.Q(tau));
}

/// d beta / dx = exp(int_0^t F/l) for initial-origin points.
inline double dbeta_dx(double t, double x, const TraceContext& ctx) {
  const Origin o = backtrace(t, x, ctx);
  if (!o.from_initial()) throw Error(ErrorKind::Argument, "dbeta_dx requires an initial-origin point");
  return std::exp(ctx.Q(t));
}

/**
 * Time at which the forward characteristic from (t_start, 0) reaches x = 1,
 * located on the RK4 trajectory by bisection inside the crossing step.
 * Empty when the curve is still inside the domain at the end of the interval.
 */
inline std::optional<double> crossing_time(const TraceContext& ctx) {
  const std::size_t n = ctx.size();
  double y = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double s = ctx.node(i);
    const double h = ctx.node(i + 1) - s;
    const double y_next = detail::rk4_step(ctx, s, y, h);
    if (y_next >= 1.0) {
      double lo = 0.0, hi = 1.0;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double ym = detail::rk4_step(ctx, s, y, mid * h);
        if (std::abs(ym - 1.0) <= 1e-14) {
          lo = hi = mid;
          break;
        }
        if (ym < 1.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return s + 0.5 * (lo + hi) * h;
    }
    y = y_next;
  }
  return std::nullopt;
}

}  // namespace extrusion

#endif  // EXTRUSION_CHARACTERISTICS_HPP
