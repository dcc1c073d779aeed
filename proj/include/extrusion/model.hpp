#ifndef EXTRUSION_MODEL_HPP
#define EXTRUSION_MODEL_HPP

/**
 * @file model.hpp
 * @brief Constitutive functions of the isothermal extruder model.
 *
 * The partially filled zone [0, l(t)] is normalized to [0, 1]. On it the
 * filling ratio is transported with speed
 *
 *   alpha_p(x) = (zeta N - x F(l, N, f_p(t,1))) / l,
 *
 * while the interface between the partially and fully filled zones moves with
 * dl/dt = F = N g(l, f_p(t,1)), where
 *
 *   g(l, f) = zeta K_d (L - l) / ([B rho0 + K_d (L - l)] (1 - f)) - zeta f / (1 - f).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "extrusion/error.hpp"

namespace extrusion {

struct PhysicalParams {
  double zeta = 1.0;   ///< screw pitch
  double L = 1.0;      ///< extruder length
  double K_d = 1.0;    ///< die conductance
  double B = 1.0;      ///< geometric parameter
  double rho0 = 1.0;   ///< melt density
  double V_eff = 1.0;  ///< effective volume

  double rho_v() const noexcept { return rho0 * V_eff; }

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::Domain, std::string("parameter ") + name + " must be finite and > 0");
      }
    };
    check(zeta, "zeta");
    check(L, "L");
    check(K_d, "K_d");
    check(B, "B");
    check(rho0, "rho0");
    check(V_eff, "V_eff");
  }
};

struct EquilibriumPoint {
  double l_e = 0.0;
  double N_e = 0.0;
  double f_pe = 0.0;
};

namespace detail {

inline void require_interface_in_domain(double l, const PhysicalParams& p) {
  if (!(l > 0.0 && l < p.L)) {
    std::ostringstream os;
    os << "interface position l=" << l << " outside (0, L=" << p.L << ")";
    throw Error(ErrorKind::Domain, os.str());
  }
}

/// K_d (L - l) / (B rho0 + K_d (L - l)): the filling ratio that zeroes g at l.
inline double die_ratio(double l, const PhysicalParams& p) {
  const double u = p.K_d * (p.L - l);
  return u / (p.B * p.rho0 + u);
}

}  // namespace detail

inline double eval_g(double l, double f_p1, const PhysicalParams& p) {
  detail::require_interface_in_domain(l, p);
  if (!(f_p1 < 1.0)) {
    throw Error(ErrorKind::SingularDenominator, "g is singular for f_p(t,1) >= 1");
  }
  if (f_p1 < 0.0) {
    throw Error(ErrorKind::Domain, "filling ratio at x=1 must be >= 0");
  }
  const double u = p.L - l;
  const double one_minus_f = 1.0 - f_p1;
  return p.zeta * p.K_d * u / ((p.B * p.rho0 + p.K_d * u) * one_minus_f) -
         p.zeta * f_p1 / one_minus_f;
}

inline double eval_F(double l, double N, double f_p1, const PhysicalParams& p) {
  return N * eval_g(l, f_p1, p);
}

/// Partial derivatives of F with respect to (l, N, f_p(t,1)).
struct FGradient {
  double d_l = 0.0;
  double d_N = 0.0;
  double d_f = 0.0;
};

inline FGradient eval_F_gradient(double l, double N, double f_p1, const PhysicalParams& p) {
  const double g = eval_g(l, f_p1, p);
  const double u = p.L - l;
  const double denom = p.B * p.rho0 + p.K_d * u;
  const double one_minus_f = 1.0 - f_p1;
  const double dg_dl = -p.zeta * p.K_d * p.B * p.rho0 / (denom * denom * one_minus_f);
  const double dg_df = p.zeta * (detail::die_ratio(l, p) - 1.0) / (one_minus_f * one_minus_f);
  return {N * dg_dl, g, N * dg_df};
}

inline double eval_alpha_p(double x, double N, double l, double f_p1, const PhysicalParams& p) {
  if (!(l > 0.0)) {
    throw Error(ErrorKind::Domain, "transport speed needs l > 0");
  }
  return (p.zeta * N - x * eval_F(l, N, f_p1, p)) / l;
}

/// Boundary filling ratio F_in / (rho0 V_eff N).
inline double inflow_value(double F_in, double N, const PhysicalParams& p) {
  if (!(N > 0.0)) {
    throw Error(ErrorKind::Domain, "inflow ratio needs screw speed N > 0");
  }
  return F_in / (p.rho_v() * N);
}

/// Which coordinate of the equilibrium is prescribed.
enum class EquilibriumGiven { InterfacePosition, FillingRatio };

inline EquilibriumPoint solve_equilibrium(const PhysicalParams& p, EquilibriumGiven given,
                                          double value, double N_e) {
  p.validate();
  if (!(N_e > 0.0)) {
    throw Error(ErrorKind::Domain, "equilibrium screw speed must be > 0");
  }
  EquilibriumPoint eq;
  eq.N_e = N_e;
  if (given == EquilibriumGiven::InterfacePosition) {
    detail::require_interface_in_domain(value, p);
    eq.l_e = value;
    eq.f_pe = detail::die_ratio(value, p);
  } else {
    if (!(value > 0.0 && value < 1.0)) {
      throw Error(ErrorKind::Domain, "equilibrium filling ratio must lie in (0,1)");
    }
    eq.f_pe = value;
    eq.l_e = p.L - p.B * p.rho0 * value / (p.K_d * (1.0 - value));
  }
  if (!(eq.l_e > 0.0 && eq.l_e < p.L) || !(eq.f_pe > 0.0 && eq.f_pe < 1.0)) {
    std::ostringstream os;
    os << "counterpart outside its range (l_e=" << eq.l_e << ", f_pe=" << eq.f_pe << ")";
    throw Error(ErrorKind::InfeasibleEquilibrium, os.str());
  }
  return eq;
}

/// Strict upper bound for the radius of the candidate ball around an equilibrium.
inline double eps1_bound(const EquilibriumPoint& eq, const PhysicalParams& p) {
  return std::min({eq.l_e, p.L - eq.l_e, eq.f_pe, 1.0 - eq.f_pe});
}

struct BoxNormOptions {
  int points_per_axis = 101;
  double safety = 1.25;
};

/**
 * Sampled W^{1,inf} size of F over the box |l-l_e|, |N-N_e|, |f-f_pe| <= eps1:
 * the sum of the sups of |F| and of its three partials, times a safety factor.
 * The f-axis is restricted to the box (F is unbounded as f -> 1).
 */
inline double norm_F_box(const PhysicalParams& p, const EquilibriumPoint& eq, double eps1,
                         const BoxNormOptions& opts = {}) {
  if (!(eps1 >= 0.0) || !(eps1 < eps1_bound(eq, p))) {
    std::ostringstream os;
    os << "eps1=" << eps1 << " must lie in [0, " << eps1_bound(eq, p) << ")";
    throw Error(ErrorKind::Domain, os.str());
  }
  if (opts.points_per_axis < 1 || !(opts.safety >= 1.0)) {
    throw Error(ErrorKind::Argument, "box sampling needs >= 1 point per axis and safety >= 1");
  }
  const int n = eps1 == 0.0 ? 1 : opts.points_per_axis;
  auto axis = [n, eps1](double center, int i) {
    return n == 1 ? center : center - eps1 + 2.0 * eps1 * i / (n - 1);
  };
  double sup_F = 0.0, sup_l = 0.0, sup_N = 0.0, sup_f = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = axis(eq.l_e, i);
    for (int k = 0; k < n; ++k) {
      const double f = axis(eq.f_pe, k);
      const double g = eval_g(l, f, p);
      const FGradient unit = eval_F_gradient(l, 1.0, f, p);
      for (int j = 0; j < n; ++j) {
        const double N = axis(eq.N_e, j);
        const double aN = std::abs(N);
        sup_F = std::max(sup_F, aN * std::abs(g));
        sup_l = std::max(sup_l, aN * std::abs(unit.d_l));
        sup_N = std::max(sup_N, std::abs(g));
        sup_f = std::max(sup_f, aN * std::abs(unit.d_f));
      }
    }
  }
  return opts.safety * (sup_F + sup_l + sup_N + sup_f);
}

}  // namespace extrusion

#endif  // EXTRUSION_MODEL_HPP
