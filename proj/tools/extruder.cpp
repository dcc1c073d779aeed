// extruder: command-line front end for the extruder model solvers.
//
// Exit codes: 0 success, 2 configuration error (first offending key),
// 3 solver failure or failed verification.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "extrusion/extrusion.hpp"

namespace fs = std::filesystem;
using namespace extrusion;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Argument, "cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void print_equilibrium(const Scenario& s) {
  std::printf("l_e=%.10g\n", s.eq.l_e);
  std::printf("N_e=%.10g\n", s.eq.N_e);
  std::printf("f_pe=%.10g\n", s.eq.f_pe);
  std::printf("F_e=%.10g\n", s.F_e());
  std::printf("T_e=%.10g\n", critical_time(s.eq, s.params));
}

void require_data(const Scenario& s) {
  if (s.f0.empty()) throw ConfigError("data.l0", "missing (data section required)");
}

void run_simulate(const Scenario& s, const std::string& out, const std::string& method) {
  require_data(s);
  ensure_dir(out);
  const CauchyData data = s.cauchy();
  const std::string trace_path = join(out, "trace.csv");
  const std::string field_path = join(out, "field.csv");
  if (method == "characteristics") {
    const SemiGlobalSolution sol = solve_semiglobal(data, s.T, s.solver);
    CsvWriter w(trace_path, {"t", "l", "fp_at_1", "N", "F_in"});
    for (std::size_t i = 0; i < sol.l.size(); ++i) {
      const double t = sol.l.node(i);
      w.row({t, sol.l[i], sol.b[i], data.N(t), data.F_in(t)});
    }
    w.close();
    write_field_csv(field_path, sol.field);
    return;
  }
  const std::size_t steps = intervals_for(s.T, s.solver.dt);
  std::vector<double> times;
  const std::size_t stride = std::max<std::size_t>(1, s.solver.output_stride);
  for (std::size_t i = 0; i < steps; i += stride) times.push_back(s.T * static_cast<double>(i) / steps);
  times.push_back(s.T);
  UpwindConfig cfg;
  cfg.dx = s.solver.dx;
  cfg.cfl = s.cfl;
  cfg.trace_intervals = steps;
  const UpwindResult up = simulate_upwind(data, s.T, cfg, times);
  CsvWriter w(trace_path, {"t", "l", "fp_at_1", "N", "F_in"});
  for (std::size_t i = 0; i < up.l.size(); ++i) {
    const double t = up.l.node(i);
    w.row({t, up.l[i], up.b[i], data.N(t), data.F_in(t)});
  }
  w.close();
  write_field_csv(field_path, up.field);
}

void run_control(const Scenario& s, const std::string& out) {
  if (!s.control) throw ConfigError("control.l0", "missing (control section required)");
  const double T = s.control->T;
  const FeasibilityCheck fc = feasibility_check(T, s.eq, s.params);
  if (!fc.pass) {
    char msg[256];
    std::snprintf(msg, sizeof msg,
                  "horizon T=%.10g does not exceed the critical time T_e=%.10g: the characteristic leaving "
                  "(0,0) only reaches x=%.10g by T",
                  T, fc.critical_time, fc.witness);
    throw Error(ErrorKind::InfeasibleHorizon, msg);
  }
  const ControlTarget tg = s.target();
  const SynthesisReport r = synthesize(tg, s.params, s.eq, s.control_options());
  VerifyOptions vo;
  vo.solver = s.solver;
  vo.upwind.dx = s.solver.dx;
  vo.upwind.cfl = s.cfl;
  const ControlCertificate c = verify_control(tg, r, s.params, s.eq, vo);

  ensure_dir(out);
  {
    CsvWriter w(join(out, "controls.csv"), {"t", "N", "F_in"});
    for (std::size_t i = 0; i < r.N.size(); ++i) w.row({r.N.node(i), r.N[i], r.F_in[i]});
    w.close();
  }
  const double t0 = r.t0 ? *r.t0 : std::nan("");
  {
    CsvWriter w(join(out, "certificate.csv"), {"quantity", "value"});
    auto put = [&](const char* name, double v) {
      w.cell(name).cell(v);
      w.end_row();
    };
    put("l_error_characteristics", c.characteristic_l_error);
    put("fp_error_characteristics", c.characteristic_f_error);
    put("l_error_upwind", c.upwind_l_error);
    put("fp_error_upwind", c.upwind_f_error);
    put("control_size", c.control_size);
    put("control_size_over_nu", c.control_ratio);
    put("target_deviation", r.target_deviation);
    put("within_assumption", r.within_assumption ? 1.0 : 0.0);
    put("interface_hold", r.interface_hold ? 1.0 : 0.0);
    put("t0", t0);
    put("t1", r.t1);
    put("iterations", r.iterations);
    put("g_min_encountered", r.g_min_encountered);
    w.close();
  }
  nlohmann::ordered_json j;
  j["T"] = T;
  j["T_e"] = fc.critical_time;
  j["nu"] = tg.nu;
  j["iterations"] = r.iterations;
  j["distances"] = r.distances;
  j["contraction_factors"] = r.contraction_factors;
  j["t0"] = r.t0 ? nlohmann::ordered_json(*r.t0) : nlohmann::ordered_json(nullptr);
  j["t1"] = r.t1;
  j["g_min_encountered"] = r.g_min_encountered;
  j["final_errors"] = {{"l", r.final_errors.l}, {"fp", r.final_errors.f}};
  j["control_size"] = r.control_size;
  j["target_deviation"] = r.target_deviation;
  j["within_assumption"] = r.within_assumption;
  j["interface_hold"] = r.interface_hold;
  j["h"] = {{"v0", r.h.v0}, {"v1", r.h.v1}, {"t1", r.h.t1}, {"s0", r.h.s0}, {"s1", r.h.s1}};
  j["certificate"] = {{"l_error_characteristics", c.characteristic_l_error},
                      {"fp_error_characteristics", c.characteristic_f_error},
                      {"l_error_upwind", c.upwind_l_error},
                      {"fp_error_upwind", c.upwind_f_error},
                      {"control_size_over_nu", c.control_ratio}};
  std::FILE* f = std::fopen(join(out, "report.json").c_str(), "wb");
  if (!f) throw Error(ErrorKind::Argument, "cannot write report.json");
  const std::string text = j.dump(2) + "\n";
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

struct Check {
  std::string name;
  bool pass;
  double value;
  double limit;
};

std::vector<Check> run_verify_suite(const Scenario& s) {
  require_data(s);
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double limit) {
    checks.push_back({std::move(name), value <= limit, value, limit});
  };
  add("equilibrium_identity", std::abs(eval_g(s.eq.l_e, s.eq.f_pe, s.params)), 1e-12);

  const CauchyData data = s.cauchy();
  add("corner_condition", std::abs(check_compatibility(data, 0).defect), 1e-10);

  const double eps1 = s.solver.resolve_eps1(s.eq, s.params);
  const double delta = compute_delta(data, eps1, s.T, s.solver);
  const LocalSolveReport local = local_fixed_point(data, delta, s.solver);
  double worst_factor = 0.0;
  for (double f : local.contraction_factors) worst_factor = std::max(worst_factor, f);
  add("contraction_factor", worst_factor, 0.5);
  add("fixed_point_residual", local.residual, 1e-10);

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const TraceContext& ctx = local.trace;
  double rk4_gap = 0.0, constancy = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double t = ctx.t_start() + unit(rng) * (ctx.t_end() - ctx.t_start());
    const double x = unit(rng);
    const double s0 = ctx.t_start() + unit(rng) * (t - ctx.t_start());
    rk4_gap = std::max(rk4_gap, std::abs(xi(s0, t, x, ctx) - xi_rk4(s0, t, x, ctx)));
    const double y = xi(s0, t, x, ctx);
    if (y >= 0.0 && y <= 1.0) {
      const double a = detail::origin_value(backtrace(t, x, ctx), data);
      const double b = detail::origin_value(backtrace(s0, y, ctx), data);
      constancy = std::max(constancy, std::abs(a - b));
    }
  }
  add("xi_closed_form_vs_rk4", rk4_gap, 1e-6);
  add("constancy_along_characteristics", constancy, 1e-8);

  const SemiGlobalSolution sol = solve_semiglobal(data, s.T, s.solver);
  double l_out = -std::numeric_limits<double>::infinity(), f_out = l_out;
  for (double l : sol.l.values()) l_out = std::max({l_out, -l, l - s.params.L});
  for (double v : sol.field.values()) f_out = std::max({f_out, -v, v - 1.0});
  add("interface_inside_domain", l_out, -1e-15);
  add("filling_ratio_in_unit_interval", f_out, 0.0);

  UpwindConfig cfg;
  cfg.dx = s.solver.dx;
  cfg.cfl = s.cfl;
  cfg.trace_intervals = sol.l.size() - 1;
  const UpwindResult up = simulate_upwind(data, s.T, cfg, sol.field.t_grid());
  double gap = 0.0;
  for (std::size_t i = 0; i < up.field.nt(); ++i) {
    for (std::size_t j = 0; j < up.field.nx(); ++j) gap = std::max(gap, std::abs(up.field.at(i, j) - sol.field.at(i, j)));
  }
  double l_gap = 0.0;
  for (std::size_t i = 0; i < up.l.size(); ++i) l_gap = std::max(l_gap, std::abs(up.l[i] - sol.l[i]));
  add("upwind_field_gap", gap, 5e-3);
  add("upwind_interface_gap", l_gap, 5e-3);
  return checks;
}

int run_sweep(const Scenario& base, const std::string& out, unsigned jobs) {
  if (!base.sweep) throw ConfigError("sweep.key", "missing (sweep section required)");
  const SweepSection sw = *base.sweep;
  std::vector<Scenario> cases;
  for (const auto& v : sw.values) {
    ConfigEntries e = base.entries;
    e[sw.key] = v;
    cases.push_back(build_scenario(e, base.base_dir));
  }
  ensure_dir(out);
  std::vector<std::string> status(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cases.size(); k = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "case_%03zu", k);
      const std::string dir = join(out, name);
      try {
        if (sw.command == "simulate") {
          run_simulate(cases[k], dir, cases[k].method);
        } else {
          run_control(cases[k], dir);
        }
        status[k] = "ok";
      } catch (const std::exception& ex) {
        status[k] = std::string("failed: ") + ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < std::max(1u, jobs); ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  CsvWriter w(join(out, "sweep.csv"), {"case", "key", "value", "status"});
  int rc = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "case_%03zu", k);
    std::string st = status[k];
    for (char& ch : st) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    w.cell(name).cell(sw.key).cell(sw.values[k]).cell(st);
    w.end_row();
    if (status[k] != "ok") {
      std::fprintf(stderr, "%s (%s=%s) %s\n", name, sw.key.c_str(), sw.values[k].c_str(), status[k].c_str());
      rc = kSolverError;
    }
  }
  w.close();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isothermal extruder model: equilibrium, simulation, boundary control"};
  app.require_subcommand(1);
  std::string config, out = ".", method;
  unsigned jobs = 1;

  auto* eq_cmd = app.add_subcommand("equilibrium", "print the equilibrium point");
  eq_cmd->add_option("-c,--config", config, "scenario file")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "solve the Cauchy problem, write trace.csv and field.csv");
  sim_cmd->add_option("-c,--config", config, "scenario file")->required();
  sim_cmd->add_option("-o,--out", out, "output directory");
  sim_cmd->add_option("-m,--method", method, "characteristics or upwind")
      ->check(CLI::IsMember({"characteristics", "upwind"}));

  auto* ctl_cmd = app.add_subcommand("control", "synthesize controls, write controls.csv and certificate.csv");
  ctl_cmd->add_option("-c,--config", config, "scenario file")->required();
  ctl_cmd->add_option("-o,--out", out, "output directory");

  auto* ver_cmd = app.add_subcommand("verify", "run the invariant checks on the scenario");
  ver_cmd->add_option("-c,--config", config, "scenario file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat simulate or control over sweep.values");
  sweep_cmd->add_option("-c,--config", config, "scenario file")->required();
  sweep_cmd->add_option("-o,--out", out, "output directory");
  sweep_cmd->add_option("-j,--jobs", jobs, "concurrent cases")->check(CLI::Range(1u, 64u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    const Scenario s = load_scenario(config);
    if (*eq_cmd) {
      print_equilibrium(s);
    } else if (*sim_cmd) {
      run_simulate(s, out, method.empty() ? s.method : method);
    } else if (*ctl_cmd) {
      run_control(s, out);
    } else if (*ver_cmd) {
      const auto checks = run_verify_suite(s);
      bool ok = true;
      for (const auto& c : checks) {
        std::printf("%s %s value=%.6g limit=%.6g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.limit);
        ok = ok && c.pass;
      }
      return ok ? 0 : kSolverError;
    } else if (*sweep_cmd) {
      return run_sweep(s, out, jobs);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverError;
  }
  return 0;
}
