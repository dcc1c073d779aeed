#ifndef EXTRUSION_LINTRANSPORT_HPP
#define EXTRUSION_LINTRANSPORT_HPP

/**
 * @file lintransport.hpp
 * @brief Linear transport u_t + a u_x = b u + c on (0,T) x (0,1) with inflow at
 *        x = 0, its weak-form residual, and the x-differentiated filling-ratio
 *        systems.
 *
 * The solver follows each characteristic backward with RK4 on the augmented
 * state (xi, B, C), where B = int_s^t b and C = int_s^t c exp(int_sigma^t b),
 * so that u(t,x) = u_origin exp(B) + C. RK4 on the quadrature components is
 * Simpson's rule along the characteristic.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

#include "extrusion/characteristics.hpp"
#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/wellposed.hpp"

namespace extrusion {

using Coefficient = std::function<double(double t, double x)>;

struct LinearTransportProblem {
  Coefficient a;    ///< transport speed, must stay > 0
  Coefficient b;    ///< zeroth-order coefficient
  Coefficient c;    ///< source
  Coefficient a_x;  ///< optional; central differences of a when empty
  SpaceProfile u0;
  SampledFunction h;  ///< inflow u(t,0) on [0,T]
  double T = 1.0;
  double step = 1e-3;  ///< RK4 step along characteristics, aligned to multiples of step

  double speed_slope(double t, double x) const {
    if (a_x) return a_x(t, x);
    constexpr double e = 1e-6;
    return (a(t, x + e) - a(t, x - e)) / (2.0 * e);
  }
};

namespace detail {

struct CharState {
  double xi, B, C;
};

inline CharState char_rhs(const LinearTransportProblem& p, double s, const CharState& y) {
  const double a = p.a(s, y.xi);
  if (!(a > 0.0)) {
    std::ostringstream os;
    os << "transport speed a=" << a << " not positive at (t=" << s << ", x=" << y.xi << ")";
    throw Error(ErrorKind::Coefficient, os.str());
  }
  return {a, -p.b(s, y.xi), -p.c(s, y.xi) * std::exp(y.B)};
}

inline CharState char_step(const LinearTransportProblem& p, double s, const CharState& y, double h) {
  auto axpy = [](const CharState& u, double k, const CharState& v) {
    return CharState{u.xi + k * v.xi, u.B + k * v.B, u.C + k * v.C};
  };
  const CharState k1 = char_rhs(p, s, y);
  const CharState k2 = char_rhs(p, s + 0.5 * h, axpy(y, 0.5 * h, k1));
  const CharState k3 = char_rhs(p, s + 0.5 * h, axpy(y, 0.5 * h, k2));
  const CharState k4 = char_rhs(p, s + h, axpy(y, h, k3));
  return {y.xi + h / 6.0 * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi),
          y.B + h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B),
          y.C + h / 6.0 * (k1.C + 2.0 * k2.C + 2.0 * k3.C + k4.C)};
}

}  // namespace detail

/// u at one point, tracing the characteristic back to t = 0 or x = 0.
inline double solve_linear_transport_at(const LinearTransportProblem& p, double t, double x,
                                        Provenance* origin = nullptr) {
  if (origin) *origin = Provenance::FromInitial;
  if (t <= 0.0) return p.u0(std::clamp(x, 0.0, 1.0));
  if (x <= 0.0) {
    if (origin) *origin = Provenance::FromBoundary;
    return p.h(t);
  }
  const double h = p.step;
  detail::CharState y{x, 0.0, 0.0};
  double s = t;
  auto k = static_cast<long long>(std::ceil(s / h - 1e-9)) - 1;
  while (s > 0.0) {
    double s_next = std::max(0.0, h * static_cast<double>(k));
    if (s_next >= s - 1e-12 * h) s_next = std::max(0.0, h * static_cast<double>(--k));
    --k;
    const double step = s_next - s;
    const detail::CharState y_next = detail::char_step(p, s, y, step);
    if (y_next.xi < 0.0) {
      double lo = 0.0, hi = 1.0;
      detail::CharState at = y_next;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const detail::CharState ym = detail::char_step(p, s, y, mid * step);
        if (ym.xi >= 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
        at = ym;
        if (std::abs(ym.xi) <= 1e-15) break;
      }
      const double theta = 0.5 * (lo + hi);
      at = detail::char_step(p, s, y, theta * step);
      if (origin) *origin = Provenance::FromBoundary;
      return p.h(std::max(0.0, s + theta * step)) * std::exp(at.B) + at.C;
    }
    y = y_next;
    s = s_next;
  }
  return p.u0(std::clamp(y.xi, 0.0, 1.0)) * std::exp(y.B) + y.C;
}

inline SolutionField solve_linear_transport(const LinearTransportProblem& p, const std::vector<double>& t_grid,
                                            const std::vector<double>& x_grid) {
  if (!(p.step > 0.0)) throw Error(ErrorKind::Argument, "characteristic step must be positive");
  SolutionField u(t_grid, x_grid);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      Provenance tag;
      u.at(i, j) = solve_linear_transport_at(p, t_grid[i], x_grid[j], &tag);
      u.origin(i, j) = tag;
    }
  }
  return u;
}

/// Smooth test function with phi(t,1) = 0 and its partial derivatives.
struct TestFunction {
  std::function<double(double, double)> phi, phi_t, phi_x;
};

/// {t^i x^j (1-x) : 0 <= i, j <= degree}.
inline std::vector<TestFunction> polynomial_test_family(int degree = 3) {
  std::vector<TestFunction> fam;
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; j <= degree; ++j) {
      auto pw = [](double v, int k) { return k <= 0 ? 1.0 : std::pow(v, k); };
      TestFunction f;
      f.phi = [=](double t, double x) { return pw(t, i) * pw(x, j) * (1.0 - x); };
      f.phi_t = [=](double t, double x) { return i == 0 ? 0.0 : i * pw(t, i - 1) * pw(x, j) * (1.0 - x); };
      f.phi_x = [=](double t, double x) {
        const double dxj = j == 0 ? 0.0 : j * pw(x, j - 1);
        return pw(t, i) * (dxj * (1.0 - x) - pw(x, j));
      };
      fam.push_back(std::move(f));
    }
  }
  return fam;
}

namespace detail {

inline std::vector<double> trapezoid_weights(const std::vector<double>& g, std::size_t last) {
  std::vector<double> w(last + 1, 0.0);
  for (std::size_t i = 0; i < last; ++i) {
    const double h = g[i + 1] - g[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

inline std::size_t grid_index(const std::vector<double>& g, double v) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i] - v) <= 1e-9 * std::max(1.0, std::abs(v))) return i;
  }
  std::ostringstream os;
  os << "time " << v << " is not a node of the field grid";
  throw Error(ErrorKind::Grid, os.str());
}

}  // namespace detail

/**
 * Max over the test family and over tau in {T/4, T/2, T} of the weak-form
 * identity residual, with tensor trapezoid quadrature on the field grid.
 */
inline double weak_form_residual(const SolutionField& u, const LinearTransportProblem& p,
                                 const std::vector<TestFunction>& family) {
  const auto& tg = u.t_grid();
  const auto& xg = u.x_grid();
  for (const auto& f : family) {
    for (double t : tg) {
      if (std::abs(f.phi(t, 1.0)) > 1e-12) throw Error(ErrorKind::Argument, "test function must vanish at x = 1");
    }
  }
  const auto wx = detail::trapezoid_weights(xg, xg.size() - 1);
  double worst = 0.0;
  for (double frac : {0.25, 0.5, 1.0}) {
    const std::size_t it = detail::grid_index(tg, frac * p.T);
    const auto wt = detail::trapezoid_weights(tg, it);
    for (const auto& f : family) {
      double volume = 0.0;
      for (std::size_t i = 0; i <= it; ++i) {
        if (wt[i] == 0.0) continue;
        const double t = tg[i];
        double row = 0.0;
        for (std::size_t j = 0; j < xg.size(); ++j) {
          const double x = xg[j];
          const double a = p.a(t, x);
          const double integrand =
              u.at(i, j) * (f.phi_t(t, x) + a * f.phi_x(t, x) + (p.speed_slope(t, x) + p.b(t, x)) * f.phi(t, x)) +
              p.c(t, x) * f.phi(t, x);
          row += wx[j] * integrand;
        }
        volume += wt[i] * row;
      }
      double top = 0.0, bottom = 0.0;
      for (std::size_t j = 0; j < xg.size(); ++j) {
        top += wx[j] * u.at(it, j) * f.phi(tg[it], xg[j]);
        bottom += wx[j] * p.u0(xg[j]) * f.phi(0.0, xg[j]);
      }
      double inflow = 0.0;
      for (std::size_t i = 0; i <= it; ++i) inflow += wt[i] * p.h(tg[i]) * p.a(tg[i], 0.0) * f.phi(tg[i], 0.0);
      worst = std::max(worst, std::abs(-volume + top - bottom - inflow));
    }
  }
  return worst;
}

struct EnergyAudit {
  double solution_norm = 0.0;  ///< max_t |u(t,.)|_{L2}
  double data_norm = 0.0;      ///< |u0|_{L2} + |h|_{L2} + |c|_{L2}
  double ratio = 0.0;
  bool degenerate = false;     ///< zero data
  double linearity_error = 0.0;  ///< relative gap between u(lambda data) and lambda u
};

inline EnergyAudit energy_estimate_audit(const SolutionField& u, const LinearTransportProblem& p,
                                         double lambda = 3.0) {
  EnergyAudit a;
  const auto& tg = u.t_grid();
  const auto& xg = u.x_grid();
  const auto wx = detail::trapezoid_weights(xg, xg.size() - 1);
  const auto wt = detail::trapezoid_weights(tg, tg.size() - 1);
  for (std::size_t i = 0; i < tg.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < xg.size(); ++j) s += wx[j] * u.at(i, j) * u.at(i, j);
    a.solution_norm = std::max(a.solution_norm, std::sqrt(s));
  }
  double c2 = 0.0, h2 = 0.0;
  for (std::size_t i = 0; i < tg.size(); ++i) {
    h2 += wt[i] * p.h(tg[i]) * p.h(tg[i]);
    for (std::size_t j = 0; j < xg.size(); ++j) c2 += wt[i] * wx[j] * std::pow(p.c(tg[i], xg[j]), 2);
  }
  a.data_norm = norm(NormKind::L2, p.u0) + std::sqrt(h2) + std::sqrt(c2);
  if (a.data_norm == 0.0) {
    a.degenerate = true;
  } else {
    a.ratio = a.solution_norm / a.data_norm;
  }

  LinearTransportProblem scaled = p;
  scaled.u0 = SpaceProfile(map_values(static_cast<const UniformSamples<SpaceAxis>&>(p.u0),
                                      [lambda](double v) { return lambda * v; }));
  scaled.h = map_values(p.h, [lambda](double v) { return lambda * v; });
  scaled.c = [c = p.c, lambda](double t, double x) { return lambda * c(t, x); };
  const SolutionField us = solve_linear_transport(scaled, tg, xg);
  double gap = 0.0, size = 0.0;
  for (std::size_t k = 0; k < u.values().size(); ++k) {
    gap = std::max(gap, std::abs(us.values()[k] - lambda * u.values()[k]));
    size = std::max(size, std::abs(lambda * u.values()[k]));
  }
  a.linearity_error = size == 0.0 ? gap : gap / size;
  return a;
}

struct CompatibilityCheck {
  bool pass = true;
  double defect = 0.0;
};

/**
 * Corner conditions at (t0, 0). Order 0: inflow ratio equals f0(0). Order 1:
 * f0'(0) + l0/(zeta N(t0)) * d/dt(inflow ratio)(t0) = 0. Derivatives by
 * one-sided difference quotients, fourth order when five samples exist so the
 * truncation error of smooth data stays well below the tolerance.
 */
inline CompatibilityCheck check_compatibility(const CauchyData& data, int order, double tol = 1e-8) {
  CompatibilityCheck c;
  auto forward_slope = [](auto&& at, std::size_t samples, double h) {
    if (samples >= 5) {
      return (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
    }
    return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  };
  if (order == 0) {
    c.defect = data.inflow(data.t0) - data.f0(0.0);
  } else if (order == 1) {
    const double fx = forward_slope([&](int k) { return data.f0[static_cast<std::size_t>(k)]; }, data.f0.size(),
                                    data.f0.step());
    const bool fine_feed = data.F_in.step() <= data.N.step();
    const double ht = fine_feed ? data.F_in.step() : data.N.step();
    const double t = data.t0;
    const double t_end = std::min(data.F_in.end(), data.N.end());
    const auto nt = static_cast<std::size_t>(std::floor((t_end - t) / ht * (1.0 + 1e-12))) + 1;
    const double rt = forward_slope([&](int k) { return data.inflow(t + k * ht); }, nt, ht);
    c.defect = fx + data.l0 / (data.params.zeta * data.N(t)) * rt;
  } else {
    throw Error(ErrorKind::Argument, "compatibility order must be 0 or 1");
  }
  c.pass = std::abs(c.defect) <= tol;
  return c;
}

struct DerivativeFields {
  SolutionField f_px;
  SolutionField f_pxx;
};

/// The two x-differentiated transport problems along the trace of a solved run.
struct DerivativeProblems {
  LinearTransportProblem first;
  LinearTransportProblem second;
};

inline DerivativeProblems derivative_problems(const SemiGlobalSolution& sol, const CauchyData& data) {
  const auto ctx = std::make_shared<TraceContext>(sol.trace());
  const double zeta = data.params.zeta;
  const auto& lt = sol.l;
  const std::size_t n = lt.size();

  std::vector<double> ratio(n), kappa(n), F(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = lt.node(i);
    ratio[i] = data.inflow(t);
    kappa[i] = lt[i] / (zeta * sol.N[i]);
    F[i] = eval_F(lt[i], sol.N[i], sol.b[i], data.params);
  }
  const auto dratio = difference_quotient(SampledFunction(lt.start(), lt.end(), ratio));
  std::vector<double> h1(n), kr(n);
  for (std::size_t i = 0; i < n; ++i) {
    kr[i] = kappa[i] * dratio[i];
    h1[i] = -kr[i];
  }
  const auto dkr = difference_quotient(SampledFunction(lt.start(), lt.end(), kr));
  std::vector<double> h2(n);
  for (std::size_t i = 0; i < n; ++i) {
    h2[i] = -kappa[i] * (F[i] / (zeta * sol.N[i]) * dratio[i] - dkr[i]);
  }

  auto speed = [ctx](double t, double x) { return ctx->alpha(t, x); };
  auto slope = [ctx](double t, double) { return -ctx->F(t) / ctx->l()(t); };
  auto zero = [](double, double) { return 0.0; };

  DerivativeProblems dp;
  dp.first.a = speed;
  dp.first.a_x = slope;
  dp.first.b = [ctx](double t, double) { return ctx->F(t) / ctx->l()(t); };
  dp.first.c = zero;
  dp.first.u0 = difference_quotient(data.f0);
  dp.first.h = SampledFunction(lt.start(), lt.end(), std::move(h1));
  dp.first.T = lt.end() - lt.start();
  dp.first.step = lt.step();

  dp.second = dp.first;
  dp.second.b = [ctx](double t, double) { return 2.0 * ctx->F(t) / ctx->l()(t); };
  dp.second.u0 = second_difference_quotient(data.f0);
  dp.second.h = SampledFunction(lt.start(), lt.end(), std::move(h2));
  return dp;
}

/**
 * f_px and f_pxx on the given grid. Requires both corner conditions; the
 * first-order one is what makes f_px continuous across the characteristic
 * leaving (0, 0).
 */
inline DerivativeFields derivative_fields(const SemiGlobalSolution& sol, const CauchyData& data,
                                          const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                                          double compat_tol = 1e-8) {
  for (int order : {0, 1}) {
    const auto c = check_compatibility(data, order, compat_tol);
    if (!c.pass) {
      std::ostringstream os;
      os << "corner condition of order " << order << " violated, defect " << c.defect;
      throw Error(ErrorKind::Compatibility, os.str());
    }
  }
  const auto dp = derivative_problems(sol, data);
  return {solve_linear_transport(dp.first, t_grid, x_grid), solve_linear_transport(dp.second, t_grid, x_grid)};
}

}  // namespace extrusion

#endif  // EXTRUSION_LINTRANSPORT_HPP
