#ifndef EXTRUSION_SCENARIO_HPP
#define EXTRUSION_SCENARIO_HPP

/**
 * @file scenario.hpp
 * @brief Flat "section.key = value" scenario files.
 *
 *   params.{zeta,L,K_d,B,rho0,V_eff}
 *   equilibrium.N_e and exactly one of equilibrium.l_e / equilibrium.f_pe
 *   data.l0, data.f0, data.F_in, data.N          (function specs, see below)
 *   numerics.{dt,dx,eps1_fraction,tolerance,max_iterations,cfl,output_stride}
 *   mode.T, mode.method = characteristics | upwind
 *   control.{target,l0,l1,T,nu,f0,f1,h_shape}     (control subcommand)
 *   sweep.{key,values,command}                    (sweep subcommand)
 *
 * Function specs: "constant v", "linear v0 v1", "sine-perturbation base amp [k]"
 * (base + amp sin(k pi s) on the unit coordinate s), or "csv:<path>" with a
 * header row and (coordinate,value) rows on a uniform grid. Any number may be
 * written as one of the tokens l_e, N_e, f_pe, F_e (= f_pe rho0 V_eff N_e),
 * optionally negated. '#' starts a comment.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "extrusion/control.hpp"
#include "extrusion/error.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/model.hpp"
#include "extrusion/wellposed.hpp"

namespace extrusion {

/// Configuration problem tied to one key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorKind::Config, key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

using ConfigEntries = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> w;
  for (std::string t; is >> t;) w.push_back(t);
  return w;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "params.zeta",        "params.L",           "params.K_d",       "params.B",
      "params.rho0",        "params.V_eff",       "equilibrium.l_e",  "equilibrium.f_pe",
      "equilibrium.N_e",    "data.l0",            "data.f0",          "data.F_in",
      "data.N",             "numerics.dt",        "numerics.dx",      "numerics.eps1_fraction",
      "numerics.tolerance", "numerics.max_iterations", "numerics.cfl", "numerics.output_stride",
      "mode.T",             "mode.method",        "control.target",   "control.l0",
      "control.l1",         "control.T",          "control.nu",       "control.f0",
      "control.f1",         "control.h_shape",    "sweep.key",        "sweep.values",
      "sweep.command"};
  return keys;
}

}  // namespace detail

inline ConfigEntries parse_config(std::istream& in) {
  ConfigEntries e;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    bool known = false;
    for (const auto& k : detail::known_keys()) known = known || k == key;
    if (!known) throw ConfigError(key, "unknown key");
    if (value.empty()) throw ConfigError(key, "empty value");
    if (e.count(key)) throw ConfigError(key, "duplicate key");
    e[key] = value;
  }
  return e;
}

inline ConfigEntries load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  return parse_config(in);
}

struct ControlSection {
  std::string target = "steady";  ///< steady | profiles
  double l0 = 0.0, l1 = 0.0, T = 1.0, nu = 1e-2;
  std::string f0, f1;
  HShape h_shape = HShape::Matched;
};

struct SweepSection {
  std::string key;
  std::vector<std::string> values;
  std::string command = "simulate";
};

struct Scenario {
  ConfigEntries entries;
  std::string base_dir;  ///< csv: paths are resolved against this
  PhysicalParams params;
  EquilibriumPoint eq;
  double l0 = 0.0;
  std::string f0, F_in, N;
  double T = 1.0;
  std::string method = "characteristics";
  SolverOptions solver;
  double cfl = 0.9;
  std::optional<ControlSection> control;
  std::optional<SweepSection> sweep;

  double F_e() const { return eq.f_pe * params.rho_v() * eq.N_e; }

  double number(const std::string& key, const std::string& text) const {
    std::string s = text;
    double sign = 1.0;
    if (!s.empty() && s[0] == '-' && !std::isdigit(static_cast<unsigned char>(s.size() > 1 ? s[1] : '0'))) {
      sign = -1.0;
      s.erase(0, 1);
    }
    if (s == "l_e") return sign * eq.l_e;
    if (s == "N_e") return sign * eq.N_e;
    if (s == "f_pe") return sign * eq.f_pe;
    if (s == "F_e") return sign * F_e();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError(key, "'" + text + "' is not a number");
    }
    return sign * v;
  }

  /// Samples a function spec on [start, end] with the given number of intervals.
  template <class Axis>
  UniformSamples<Axis> function(const std::string& key, const std::string& spec, double start, double end,
                                std::size_t intervals) const {
    if (spec.rfind("csv:", 0) == 0) return csv_function<Axis>(key, spec.substr(4), start, end);
    const auto w = detail::split_words(spec);
    if (w.empty()) throw ConfigError(key, "empty function spec");
    const std::size_t n = intervals + 1;
    auto unit = [&](double s) { return (s - start) / (end - start); };
    if (w[0] == "constant" && w.size() == 2) {
      return UniformSamples<Axis>::constant(start, end, n, number(key, w[1]));
    }
    if (w[0] == "linear" && w.size() == 3) {
      const double a = number(key, w[1]), b = number(key, w[2]);
      return UniformSamples<Axis>::from_function(start, end, n, [&](double s) { return a + (b - a) * unit(s); });
    }
    if (w[0] == "sine-perturbation" && (w.size() == 3 || w.size() == 4)) {
      const double base = number(key, w[1]), amp = number(key, w[2]);
      const double k = w.size() == 4 ? number(key, w[3]) : 1.0;
      return UniformSamples<Axis>::from_function(
          start, end, n, [&](double s) { return base + amp * std::sin(k * std::numbers::pi * unit(s)); });
    }
    throw ConfigError(key, "unrecognized function spec '" + spec + "'");
  }

  SpaceProfile profile(const std::string& key, const std::string& spec) const {
    try {
      return SpaceProfile(function<SpaceAxis>(key, spec, 0.0, 1.0, intervals_for(1.0, solver.dx)));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }

  SampledFunction time_function(const std::string& key, const std::string& spec, double horizon) const {
    try {
      return function<TimeAxis>(key, spec, 0.0, horizon, intervals_for(horizon, solver.dt));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }

  CauchyData cauchy() const {
    CauchyData d;
    d.l0 = l0;
    d.params = params;
    d.eq = eq;
    d.f0 = profile("data.f0", f0);
    d.F_in = time_function("data.F_in", F_in, T);
    d.N = time_function("data.N", N, T);
    return d;
  }

  ControlTarget target() const {
    if (!control) throw ConfigError("control.l0", "missing control section");
    const auto& c = *control;
    if (c.target == "steady") {
      try {
        return steady_speed_target(params, eq, c.l0, c.l1, c.T, c.nu, intervals_for(1.0, solver.dx) + 1);
      } catch (const Error& e) {
        throw ConfigError("control.target", e.what());
      }
    }
    ControlTarget tg;
    tg.l0 = c.l0;
    tg.l1 = c.l1;
    tg.T = c.T;
    tg.nu = c.nu;
    tg.f0 = profile("control.f0", c.f0);
    tg.f1 = profile("control.f1", c.f1);
    return tg;
  }

  ControlOptions control_options() const {
    ControlOptions o;
    o.dt = solver.dt;
    o.dx = solver.dx;
    if (control) o.h_shape = control->h_shape;
    return o;
  }

 private:
  template <class Axis>
  UniformSamples<Axis> csv_function(const std::string& key, const std::string& file, double start,
                                    double end) const {
    const std::string path = !file.empty() && file[0] == '/' ? file : base_dir + file;
    std::ifstream in(path);
    if (!in) throw ConfigError(key, "cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> coords, values;
    while (std::getline(in, line)) {
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto comma = t.find(',');
      if (comma == std::string::npos) throw ConfigError(key, path + ": expected two columns");
      coords.push_back(number(key, detail::trim(std::string_view(t).substr(0, comma))));
      values.push_back(number(key, detail::trim(std::string_view(t).substr(comma + 1))));
    }
    if (coords.size() < 2) throw ConfigError(key, path + ": needs at least two rows");
    const double h = (coords.back() - coords.front()) / static_cast<double>(coords.size() - 1);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (std::abs(coords[i] - (coords.front() + h * static_cast<double>(i))) > 1e-9 * std::max(1.0, std::abs(h))) {
        throw ConfigError(key, path + ": coordinates are not uniformly spaced");
      }
    }
    if (std::abs(coords.front() - start) > 1e-12 || coords.back() < end - 1e-12) {
      std::ostringstream os;
      os << path << ": must cover [" << start << ", " << end << "]";
      throw ConfigError(key, os.str());
    }
    return UniformSamples<Axis>(coords.front(), coords.back(), std::move(values));
  }
};

namespace detail {

inline const std::string& require(const ConfigEntries& e, const std::string& key) {
  const auto it = e.find(key);
  if (it == e.end()) throw ConfigError(key, "missing");
  return it->second;
}

inline std::optional<std::string> optional_entry(const ConfigEntries& e, const std::string& key) {
  const auto it = e.find(key);
  if (it == e.end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Validates the entries and resolves tokens. Throws ConfigError naming the first bad key.
inline Scenario build_scenario(const ConfigEntries& e, std::string base_dir = {}) {
  using detail::optional_entry;
  using detail::require;
  Scenario s;
  s.entries = e;
  if (!base_dir.empty() && base_dir.back() != '/') base_dir += '/';
  s.base_dir = std::move(base_dir);

  auto positive = [&](const std::string& key, double& slot) {
    slot = s.number(key, require(e, key));
    if (!(slot > 0.0)) throw ConfigError(key, "must be > 0");
  };
  positive("params.zeta", s.params.zeta);
  positive("params.L", s.params.L);
  positive("params.K_d", s.params.K_d);
  positive("params.B", s.params.B);
  positive("params.rho0", s.params.rho0);
  positive("params.V_eff", s.params.V_eff);

  double N_e = 0.0;
  positive("equilibrium.N_e", N_e);
  const auto l_e = optional_entry(e, "equilibrium.l_e");
  const auto f_pe = optional_entry(e, "equilibrium.f_pe");
  if (l_e && f_pe) throw ConfigError("equilibrium.f_pe", "give only one of equilibrium.l_e and equilibrium.f_pe");
  if (!l_e && !f_pe) throw ConfigError("equilibrium.l_e", "missing (or give equilibrium.f_pe)");
  try {
    s.eq = l_e ? solve_equilibrium(s.params, EquilibriumGiven::InterfacePosition, s.number("equilibrium.l_e", *l_e), N_e)
               : solve_equilibrium(s.params, EquilibriumGiven::FillingRatio, s.number("equilibrium.f_pe", *f_pe), N_e);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    throw ConfigError(l_e ? "equilibrium.l_e" : "equilibrium.f_pe", err.what());
  }

  if (auto v = optional_entry(e, "numerics.dt")) s.solver.dt = s.number("numerics.dt", *v);
  if (auto v = optional_entry(e, "numerics.dx")) s.solver.dx = s.number("numerics.dx", *v);
  if (auto v = optional_entry(e, "numerics.eps1_fraction")) s.solver.eps1_fraction = s.number("numerics.eps1_fraction", *v);
  if (auto v = optional_entry(e, "numerics.tolerance")) s.solver.tolerance = s.number("numerics.tolerance", *v);
  if (auto v = optional_entry(e, "numerics.max_iterations")) {
    s.solver.max_iterations = static_cast<int>(s.number("numerics.max_iterations", *v));
    if (s.solver.max_iterations < 1) throw ConfigError("numerics.max_iterations", "must be >= 1");
  }
  if (auto v = optional_entry(e, "numerics.output_stride")) {
    const double st = s.number("numerics.output_stride", *v);
    if (!(st >= 1.0) || st != std::floor(st)) throw ConfigError("numerics.output_stride", "must be a positive integer");
    s.solver.output_stride = static_cast<std::size_t>(st);
  }
  if (auto v = optional_entry(e, "numerics.cfl")) s.cfl = s.number("numerics.cfl", *v);
  if (!(s.solver.dt > 0.0)) throw ConfigError("numerics.dt", "must be > 0");
  if (!(s.solver.dx > 0.0)) throw ConfigError("numerics.dx", "must be > 0");
  try {
    intervals_for(1.0, s.solver.dx);
  } catch (const Error&) {
    throw ConfigError("numerics.dx", "must divide 1");
  }
  if (!(s.solver.eps1_fraction > 0.0 && s.solver.eps1_fraction < 1.0)) {
    throw ConfigError("numerics.eps1_fraction", "must lie in (0,1)");
  }
  if (!(s.solver.tolerance > 0.0)) throw ConfigError("numerics.tolerance", "must be > 0");
  if (!(s.cfl > 0.0 && s.cfl <= 1.0)) throw ConfigError("numerics.cfl", "must lie in (0,1]");

  if (auto v = optional_entry(e, "mode.T")) s.T = s.number("mode.T", *v);
  if (!(s.T > 0.0)) throw ConfigError("mode.T", "must be > 0");
  try {
    intervals_for(s.T, s.solver.dt);
  } catch (const Error&) {
    throw ConfigError("mode.T", "must be a multiple of numerics.dt");
  }
  if (auto v = optional_entry(e, "mode.method")) {
    if (*v != "characteristics" && *v != "upwind") throw ConfigError("mode.method", "expected characteristics or upwind");
    s.method = *v;
  }

  const bool has_data = e.count("data.l0") || e.count("data.f0") || e.count("data.F_in") || e.count("data.N");
  if (has_data) {
    s.l0 = s.number("data.l0", require(e, "data.l0"));
    if (!(s.l0 > 0.0 && s.l0 < s.params.L)) throw ConfigError("data.l0", "must lie in (0, L)");
    s.f0 = require(e, "data.f0");
    s.F_in = require(e, "data.F_in");
    s.N = require(e, "data.N");
    // Parse now so that a bad spec is reported against its key.
    (void)s.cauchy();
  }

  const bool has_control = std::any_of(e.begin(), e.end(), [](const auto& kv) { return kv.first.rfind("control.", 0) == 0; });
  if (has_control) {
    ControlSection c;
    if (auto v = optional_entry(e, "control.target")) {
      if (*v != "steady" && *v != "profiles") throw ConfigError("control.target", "expected steady or profiles");
      c.target = *v;
    }
    c.l0 = s.number("control.l0", require(e, "control.l0"));
    c.l1 = s.number("control.l1", require(e, "control.l1"));
    c.T = s.number("control.T", require(e, "control.T"));
    if (auto v = optional_entry(e, "control.nu")) c.nu = s.number("control.nu", *v);
    if (!(c.l0 > 0.0 && c.l0 < s.params.L)) throw ConfigError("control.l0", "must lie in (0, L)");
    if (!(c.l1 > 0.0 && c.l1 < s.params.L)) throw ConfigError("control.l1", "must lie in (0, L)");
    if (!(c.T > 0.0)) throw ConfigError("control.T", "must be > 0");
    try {
      intervals_for(c.T, s.solver.dt);
    } catch (const Error&) {
      throw ConfigError("control.T", "must be a multiple of numerics.dt");
    }
    if (!(c.nu > 0.0)) throw ConfigError("control.nu", "must be > 0");
    if (auto v = optional_entry(e, "control.h_shape")) {
      if (*v == "matched") c.h_shape = HShape::Matched;
      else if (*v == "linear") c.h_shape = HShape::Linear;
      else if (*v == "smoothstep") c.h_shape = HShape::CubicSmoothstep;
      else throw ConfigError("control.h_shape", "expected matched, linear or smoothstep");
    }
    if (c.target == "profiles") {
      c.f0 = require(e, "control.f0");
      c.f1 = require(e, "control.f1");
    }
    s.control = c;
    if (c.target == "profiles") (void)s.target();
  }

  if (e.count("sweep.key") || e.count("sweep.values") || e.count("sweep.command")) {
    SweepSection sw;
    sw.key = require(e, "sweep.key");
    if (sw.key.rfind("sweep.", 0) == 0) throw ConfigError("sweep.key", "cannot sweep a sweep key");
    bool known = false;
    for (const auto& k : detail::known_keys()) known = known || k == sw.key;
    if (!known) throw ConfigError("sweep.key", "unknown key '" + sw.key + "'");
    std::string item;
    std::istringstream list(require(e, "sweep.values"));
    while (std::getline(list, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) throw ConfigError("sweep.values", "empty list item");
      sw.values.push_back(item);
    }
    if (auto v = optional_entry(e, "sweep.command")) {
      if (*v != "simulate" && *v != "control") throw ConfigError("sweep.command", "expected simulate or control");
      sw.command = *v;
    }
    s.sweep = sw;
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return build_scenario(load_config(path), slash == std::string::npos ? std::string() : path.substr(0, slash));
}

}  // namespace extrusion

#endif  // EXTRUSION_SCENARIO_HPP
