#ifndef EXTRUSION_FIELDS_HPP
#define EXTRUSION_FIELDS_HPP

/**
 * @file fields.hpp
 * @brief Uniformly sampled functions of time and space, discrete norms, and the
 *        (t, x) solution container.
 *
 * All interpolation is piecewise linear, so difference-quotient norms are exact
 * for the interpolant itself.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "extrusion/error.hpp"
#include "extrusion/model.hpp"

namespace extrusion {

struct TimeAxis {};
struct SpaceAxis {};

template <class Axis>
class UniformSamples {
 public:
  UniformSamples() = default;

  UniformSamples(double start, double end, std::vector<double> values)
      : start_(start), end_(end), values_(std::move(values)) {
    if (!(end_ > start_)) {
      throw Error(ErrorKind::Grid, "sampled function needs end > start");
    }
    if (values_.size() < 2) {
      throw Error(ErrorKind::Grid, "sampled function needs at least 2 samples");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorKind::Grid, "non-finite sample");
    }
    step_ = (end_ - start_) / static_cast<double>(values_.size() - 1);
  }

  template <class Fn>
  static UniformSamples from_function(double start, double end, std::size_t points, Fn&& fn) {
    if (points < 2) throw Error(ErrorKind::Grid, "sampled function needs at least 2 samples");
    std::vector<double> v(points);
    const double h = (end - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      v[i] = fn(i + 1 == points ? end : start + h * static_cast<double>(i));
    }
    return UniformSamples(start, end, std::move(v));
  }

  static UniformSamples constant(double start, double end, std::size_t points, double value) {
    return UniformSamples(start, end, std::vector<double>(points, value));
  }

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double node(std::size_t i) const noexcept {
    return i + 1 == values_.size() ? end_ : start_ + step_ * static_cast<double>(i);
  }

  bool contains(double t) const noexcept {
    const double slack = 1e-12 * (end_ - start_);
    return t >= start_ - slack && t <= end_ + slack;
  }

  /// Index of the cell [node(i), node(i+1)] holding t (t clamped into the domain).
  std::size_t cell(double t) const noexcept {
    const double r = (t - start_) / step_;
    if (!(r > 0.0)) return 0;
    const auto last = values_.size() - 2;
    const auto i = static_cast<std::size_t>(r);
    return std::min(i, last);
  }

  double operator()(double t) const {
    if (!contains(t)) {
      std::ostringstream os;
      os << "evaluation at " << t << " outside [" << start_ << ", " << end_ << "]";
      throw Error(ErrorKind::Domain, os.str());
    }
    const double r = (t - start_) / step_;
    const double k = std::round(r);
    if (std::abs(r - k) <= 1e-12 * std::max(1.0, k) && k >= 0.0 && k < static_cast<double>(values_.size())) {
      return values_[static_cast<std::size_t>(k)];
    }
    const std::size_t i = cell(t);
    const double w = std::clamp((t - node(i)) / step_, 0.0, 1.0);
    return (1.0 - w) * values_[i] + w * values_[i + 1];
  }

 private:
  double start_ = 0.0;
  double end_ = 1.0;
  double step_ = 1.0;
  std::vector<double> values_;
};

/// Scalar function of time: l(t), N(t), F_in(t), traces f_p(t,1), h(t).
using SampledFunction = UniformSamples<TimeAxis>;

/// Scalar function on the normalized segment [0,1].
class SpaceProfile : public UniformSamples<SpaceAxis> {
 public:
  SpaceProfile() = default;
  explicit SpaceProfile(std::vector<double> values)
      : UniformSamples<SpaceAxis>(0.0, 1.0, std::move(values)) {}
  explicit SpaceProfile(UniformSamples<SpaceAxis> base) : UniformSamples<SpaceAxis>(std::move(base)) {
    if (start() != 0.0 || end() != 1.0) throw Error(ErrorKind::Grid, "space profile must live on [0,1]");
  }

  template <class Fn>
  static SpaceProfile from_function(std::size_t points, Fn&& fn) {
    return SpaceProfile(UniformSamples<SpaceAxis>::from_function(0.0, 1.0, points, std::forward<Fn>(fn)));
  }
};

template <class Axis>
UniformSamples<Axis> map_values(const UniformSamples<Axis>& f, const std::function<double(double)>& fn) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = fn(f[i]);
  return UniformSamples<Axis>(f.start(), f.end(), std::move(v));
}

/**
 * First derivative sampled on the same nodes: centered quotients inside,
 * second-order one-sided quotients at both ends.
 */
template <class Axis>
UniformSamples<Axis> difference_quotient(const UniformSamples<Axis>& f) {
  const std::size_t n = f.size();
  if (n < 3) throw Error(ErrorKind::Grid, "difference quotient needs at least 3 samples");
  const double h = f.step();
  std::vector<double> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return UniformSamples<Axis>(f.start(), f.end(), std::move(d));
}

/// Second derivative: centered second differences inside, second-order one-sided
/// stencils at the ends (copied from the neighbor when fewer than 4 samples).
template <class Axis>
UniformSamples<Axis> second_difference_quotient(const UniformSamples<Axis>& f) {
  const std::size_t n = f.size();
  if (n < 3) throw Error(ErrorKind::Grid, "second difference needs at least 3 samples");
  const double h2 = f.step() * f.step();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  if (n >= 4) {
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  } else {
    d[0] = d[1];
    d[n - 1] = d[n - 2];
  }
  return UniformSamples<Axis>(f.start(), f.end(), std::move(d));
}

inline SpaceProfile difference_quotient(const SpaceProfile& f) {
  return SpaceProfile(difference_quotient(static_cast<const UniformSamples<SpaceAxis>&>(f)));
}

inline SpaceProfile second_difference_quotient(const SpaceProfile& f) {
  return SpaceProfile(second_difference_quotient(static_cast<const UniformSamples<SpaceAxis>&>(f)));
}

enum class NormKind { Linf, W1inf, L2, H2 };

namespace detail {

inline double trapezoid_sq(std::span<const double> v, double h) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
    s += w * v[i] * v[i];
  }
  return s * h;
}

}  // namespace detail

template <class Axis>
double norm(NormKind kind, const UniformSamples<Axis>& f) {
  const auto v = f.values();
  double linf = 0.0;
  for (double x : v) linf = std::max(linf, std::abs(x));
  switch (kind) {
    case NormKind::Linf:
      return linf;
    case NormKind::W1inf: {
      if (v.size() < 3) throw Error(ErrorKind::Grid, "W1inf norm needs at least 3 samples");
      double slope = 0.0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        slope = std::max(slope, std::abs(v[i + 1] - v[i]) / f.step());
      }
      return std::max(linf, slope);
    }
    case NormKind::L2:
      return std::sqrt(detail::trapezoid_sq(v, f.step()));
    case NormKind::H2: {
      if (v.size() < 3) throw Error(ErrorKind::Grid, "H2 norm needs at least 3 samples");
      const auto d1 = difference_quotient(f);
      const auto d2 = second_difference_quotient(f);
      return std::sqrt(detail::trapezoid_sq(v, f.step()) + detail::trapezoid_sq(d1.values(), f.step()) +
                       detail::trapezoid_sq(d2.values(), f.step()));
    }
  }
  return linf;
}

enum class Zone { PFZ, FFZ };

struct PhysicalProfile {
  std::vector<double> x;
  std::vector<double> values;
};

/// Maps a normalized profile back onto [0,l] (PFZ) or [l,L] (FFZ).
inline PhysicalProfile to_physical_coordinates(const SpaceProfile& profile, double l, Zone zone,
                                               const PhysicalParams& p) {
  if (!(l > 0.0 && l < p.L)) throw Error(ErrorKind::Domain, "interface position outside (0,L)");
  PhysicalProfile out;
  out.x.resize(profile.size());
  out.values.assign(profile.values().begin(), profile.values().end());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double y = profile.node(i);
    out.x[i] = zone == Zone::PFZ ? y * l : l + y * (p.L - l);
  }
  return out;
}

enum class Provenance : unsigned char { FromInitial, FromBoundary };

inline const char* to_string(Provenance p) {
  return p == Provenance::FromInitial ? "initial" : "boundary";
}

/// f_p on a tensor (t, x) grid, row-major in t, with the origin of each value.
class SolutionField {
 public:
  SolutionField() = default;
  SolutionField(std::vector<double> t_grid, std::vector<double> x_grid)
      : t_(std::move(t_grid)), x_(std::move(x_grid)),
        values_(t_.size() * x_.size(), 0.0),
        provenance_(t_.size() * x_.size(), Provenance::FromInitial) {}

  std::size_t nt() const noexcept { return t_.size(); }
  std::size_t nx() const noexcept { return x_.size(); }
  const std::vector<double>& t_grid() const noexcept { return t_; }
  const std::vector<double>& x_grid() const noexcept { return x_; }

  double& at(std::size_t i, std::size_t j) { return values_[i * x_.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values_[i * x_.size() + j]; }
  Provenance& origin(std::size_t i, std::size_t j) { return provenance_[i * x_.size() + j]; }
  Provenance origin(std::size_t i, std::size_t j) const { return provenance_[i * x_.size() + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * x_.size(), x_.size());
  }

  /// Slice at time index i; requires a uniform x grid over [0,1].
  SpaceProfile slice(std::size_t i) const {
    return SpaceProfile(std::vector<double>(row(i).begin(), row(i).end()));
  }

  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> t_;
  std::vector<double> x_;
  std::vector<double> values_;
  std::vector<Provenance> provenance_;
};

/// Uniform grid of n+1 points over [a, b] whose last point is exactly b.
inline std::vector<double> uniform_grid(double a, double b, std::size_t intervals) {
  std::vector<double> g(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    g[i] = i == intervals ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(intervals);
  }
  return g;
}

/// Number of intervals of width h in a span, rejecting spans that h does not divide.
inline std::size_t intervals_for(double span, double h) {
  const double r = span / h;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    std::ostringstream os;
    os << "step " << h << " does not divide span " << span;
    throw Error(ErrorKind::Grid, os.str());
  }
  return static_cast<std::size_t>(n);
}

}  // namespace extrusion

#endif  // EXTRUSION_FIELDS_HPP
