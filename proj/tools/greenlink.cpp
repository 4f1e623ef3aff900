// greenlink: build, verify and sweep Green's functions from a JSON problem file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "greenlink/greenlink.hpp"
#include "greenlink/io.hpp"

namespace fs = std::filesystem;
using namespace greenlink;
using io::json;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kBadProblem = 2, kBadConfig = 3 };

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<double> tol;
  std::optional<unsigned> threads;
  bool svg = false;
};

io::RunConfig load(const Overrides& o) {
  auto cfg = io::load_config(o.config);
  if (o.out) cfg.out_dir = *o.out;
  if (o.tol) {
    if (!(*o.tol > 0.0 && *o.tol < 1e-2)) throw io::ConfigError("--tol: expected a value in (0, 1e-2)");
    cfg.tolerance = *o.tol;
  }
  if (o.threads) {
    if (*o.threads < 1) throw io::ConfigError("--threads: expected a positive integer");
    cfg.threads = *o.threads;
  }
  if (o.svg) cfg.svg = true;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<int> default_orders(const std::vector<int>& requested, int n) {
  if (!requested.empty()) return requested;
  std::vector<int> all;
  for (int l = 0; l < n; ++l) all.push_back(l);
  return all;
}

void check_orders(const std::vector<int>& orders, int lo, int hi, const char* what) {
  for (int l : orders)
    if (l < lo || l > hi)
      throw io::ConfigError(std::string(what) + ": order " + std::to_string(l) + " outside " + std::to_string(lo) +
                            ".." + std::to_string(hi));
}

// ---------------------------------------------------------------------------

int cmd_build(const Overrides& o) {
  const auto cfg = load(o);
  const auto& spec = cfg.problem;
  const int n = spec.order;
  check_orders(cfg.build.orders, 0, n, "build.orders");
  const GreenFunction g(spec, cfg.tolerance);
  const Grid grid = cfg.grid.make(spec.a, spec.b);

  double jump_error = 0.0;
  double boundary = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double s = spec.a + (spec.b - spec.a) * i / 10.0;
    jump_error = std::max(jump_error, std::abs(g.measured_jump(s) - 1.0));
    boundary = std::max(boundary, g.boundary_residual(s));
  }

  json summary;
  summary["problem"] = io::problem_to_json(spec);
  summary["solvable"] = true;
  summary["determinant"] = g.certificate().determinant;
  summary["condition"] = number_or_null(g.certificate().condition);
  summary["jump_error"] = jump_error;
  summary["boundary_residual"] = boundary;
  summary["grid"] = grid.description;

  std::ofstream csv(fs::path(cfg.out_dir) / "kernel.csv", std::ios::binary);
  io::CsvWriter w(csv, {"t", "s", "l", "value"});
  json levels = json::array();
  for (int l : cfg.build.orders) {
    const auto v = g.eval_grid(grid.t, grid.s, l);
    for (std::size_t j = 0; j < grid.s.size(); ++j)
      for (std::size_t i = 0; i < grid.t.size(); ++i) {
        const double x = v[j * grid.t.size() + i];
        if (!std::isnan(x)) w.row(grid.t[i], grid.s[j], l, x);
      }
    std::vector<double> finite;
    for (double x : v)
      if (!std::isnan(x)) finite.push_back(x);
    const auto cls = classify_sign(finite, 1e-9);
    levels.push_back({{"l", l}, {"sign", to_string(cls)}});
    if (cfg.svg)
      write_file(fs::path(cfg.out_dir) / ("kernel_l" + std::to_string(l) + ".svg"),
                 io::heatmap_svg(grid.t, grid.s, v, "d^" + std::to_string(l) + " g, M = " + io::format_number(spec.M)));
  }
  summary["levels"] = levels;
  const auto witness = strong_sign_witness(g, grid, cfg.threads);
  if (witness) {
    summary["strong_sign"] = {{"sign", to_string(witness->sign)}, {"margin", witness->margin}};
  } else {
    summary["strong_sign"] = nullptr;
  }
  const std::string text = summary.dump(2) + "\n";
  write_file(fs::path(cfg.out_dir) / "build.json", text);
  std::cout << text;
  return kOk;
}

int cmd_verify(const Overrides& o) {
  const auto cfg = load(o);
  const auto& spec = cfg.problem;
  const int n = spec.order;
  if (cfg.verify.k1 && *cfg.verify.k1 != spec.k)
    throw io::ConfigError("verify.k1 differs from problem.k; both kernels must share k");
  const auto orders = default_orders(cfg.verify.orders, n);
  check_orders(orders, 0, n - 1, "verify.orders");
  const GreenFunction g0(with_parameter(spec, cfg.verify.M0), cfg.tolerance);
  const GreenFunction g1(with_parameter(spec, cfg.verify.M1), cfg.tolerance);
  const Grid grid = cfg.grid.make(spec.a, spec.b);
  const auto reports = verify_identities(g0, g1, orders, grid, cfg.quadrature.make(), cfg.threads);

  std::ofstream csv(fs::path(cfg.out_dir) / "residuals.csv", std::ios::binary);
  io::CsvWriter w(csv, {"identity", "t", "s", "residual"});
  json tags = json::array();
  bool pass = true;
  for (const auto& r : reports) {
    for (const auto& p : r.samples) w.row(to_string(r.tag), p.t, p.s, p.residual);
    const bool ok = r.max <= cfg.verify.bound;
    pass = pass && ok;
    tags.push_back({{"identity", to_string(r.tag)},
                    {"grid", r.grid},
                    {"max", r.max},
                    {"mean", r.mean},
                    {"t_at_max", r.t_at_max},
                    {"s_at_max", r.s_at_max},
                    {"samples", r.samples.size()},
                    {"pass", ok}});
  }
  json out{{"M0", cfg.verify.M0}, {"M1", cfg.verify.M1}, {"orders", orders},
           {"bound", cfg.verify.bound}, {"identities", tags},    {"pass", pass}};
  const std::string text = out.dump(2) + "\n";
  write_file(fs::path(cfg.out_dir) / "residuals.json", text);
  std::cout << text;
  return pass ? kOk : kVerifyFailed;
}

int cmd_sweep(const Overrides& o) {
  const auto cfg = load(o);
  const auto& spec = cfg.problem;
  if (cfg.sweep.M_values.empty()) throw io::ConfigError("sweep: empty M grid");
  check_orders(cfg.sweep.orders, 0, spec.order - 1, "sweep.orders");
  if (cfg.sweep.orders.empty()) throw io::ConfigError("sweep.orders: empty");
  SweepOptions opt;
  opt.ode_tol = cfg.tolerance;
  opt.threads = cfg.threads;
  opt.max_eigenvalues = cfg.sweep.max_eigenvalues;
  opt.bisect_tol = cfg.sweep.bisect_tol;
  const Grid grid = cfg.grid.make(spec.a, spec.b);
  const auto rep = sweep(spec, cfg.sweep.M_values, cfg.sweep.orders, grid, opt);

  std::ofstream csv(fs::path(cfg.out_dir) / "sweep.csv", std::ios::binary);
  io::CsvWriter w(csv, {"M", "l", "classification", "min", "max"});
  json entries = json::array();
  for (const auto& e : rep.entries) {
    json levels = json::array();
    for (const auto& lv : e.levels) {
      w.row(e.M, lv.l, to_string(lv.set), lv.min, lv.max);
      levels.push_back({{"l", lv.l}, {"classification", to_string(lv.set)}, {"min", lv.min}, {"max", lv.max}});
    }
    entries.push_back({{"M", e.M},
                       {"determinant", e.determinant},
                       {"solvable", e.solvable},
                       {"max_abs_g", e.max_abs_g},
                       {"levels", levels}});
  }
  json windows = json::array();
  for (const auto& win : rep.windows)
    windows.push_back({{"l", win.l},
                       {"set", to_string(win.set)},
                       {"lower", win.lower.value},
                       {"lower_kind", to_string(win.lower.kind)},
                       {"upper", win.upper.value},
                       {"upper_kind", to_string(win.upper.kind)}});
  json monotone = json::array();
  std::size_t violations = 0;
  for (const auto& c : rep.monotone) {
    violations += c.ok ? 0 : 1;
    monotone.push_back({{"l", c.l},
                        {"M_lo", c.M_lo},
                        {"M_hi", c.M_hi},
                        {"direction", c.nonincreasing ? "nonincreasing" : "nondecreasing"},
                        {"worst", c.worst},
                        {"t", c.t},
                        {"s", c.s},
                        {"ok", c.ok}});
  }
  json out{{"grid", rep.grid},
           {"orders", rep.orders},
           {"eigenvalues", rep.eigenvalues.values},
           {"eigenvalues_truncated", rep.eigenvalues.truncated},
           {"windows", windows},
           {"coincidence_gap", rep.coincidence_gap ? json(*rep.coincidence_gap) : json(nullptr)},
           {"monotone_violations", violations},
           {"monotone", monotone},
           {"entries", entries}};
  write_file(fs::path(cfg.out_dir) / "sweep.json", out.dump(2) + "\n");

  if (cfg.svg) {
    std::vector<double> D;
    for (const auto& e : rep.entries) D.push_back(e.determinant);
    write_file(fs::path(cfg.out_dir) / "determinant.svg", io::line_plot_svg(rep.M, D, "characteristic determinant D(M)"));
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
      const auto& e = rep.entries[i];
      if (!e.solvable) continue;
      char name[32];
      std::snprintf(name, sizeof name, "heatmap_%03zu.svg", i);
      write_file(fs::path(cfg.out_dir) / name,
                 io::heatmap_svg(grid.t, grid.s, e.values.front(),
                                 "d^" + std::to_string(rep.orders.front()) + " g, M = " + io::format_number(e.M)));
    }
  }

  std::cout << "M points: " << rep.M.size() << "\n";
  std::cout << "eigenvalues:";
  for (double v : rep.eigenvalues.values) std::cout << ' ' << io::format_number(v);
  std::cout << (rep.eigenvalues.truncated ? " (truncated)" : "") << "\n";
  for (const auto& win : rep.windows)
    std::cout << "l=" << win.l << ' ' << to_string(win.set) << (win.lower.kind == Endpoint::Kind::open ? " (" : " [")
              << io::format_number(win.lower.value) << ", " << io::format_number(win.upper.value)
              << (win.upper.kind == Endpoint::Kind::open ? ")" : "]") << "  (" << to_string(win.lower.kind) << "/"
              << to_string(win.upper.kind) << ")\n";
  if (rep.coincidence_gap) std::cout << "|sup N_0 - inf P_0| = " << io::format_number(*rep.coincidence_gap) << "\n";
  std::cout << "monotonicity checks: " << rep.monotone.size() << ", violations: " << violations << "\n";
  return kOk;
}

int cmd_eig(const Overrides& o) {
  const auto cfg = load(o);
  EigenvalueOptions opt;
  opt.ode_tol = cfg.tolerance;
  opt.threads = cfg.threads;
  const auto res = find_eigenvalues(cfg.problem, cfg.eig.lo, cfg.eig.hi, cfg.eig.max_count, opt);
  std::ofstream csv(fs::path(cfg.out_dir) / "eigenvalues.csv", std::ios::binary);
  io::CsvWriter w(csv, {"index", "M"});
  for (std::size_t i = 0; i < res.values.size(); ++i) w.row(i, res.values[i]);
  json out{{"bracket", {cfg.eig.lo, cfg.eig.hi}}, {"eigenvalues", res.values}, {"truncated", res.truncated}};
  const std::string text = out.dump(2) + "\n";
  write_file(fs::path(cfg.out_dir) / "eig.json", text);
  std::cout << text;
  return kOk;
}

int cmd_hop(const Overrides& o) {
  const auto cfg = load(o);
  const int n = cfg.problem.order;
  if (cfg.h_op.level < 0 || cfg.h_op.level > n - 1)
    throw io::ConfigError("h_op.level: expected 0.." + std::to_string(n - 1));
  const auto H =
      build_H(cfg.problem, cfg.h_op.level, cfg.h_op.literal_placement ? MPlacement::literal_index : MPlacement::operator_slot);
  json coeffs = json::array();
  for (const auto& c : H.b) coeffs.push_back(c.to_string());
  json branches = json::array();
  for (auto b : H.branches) branches.push_back(to_string(b));
  json out{{"level", H.level},
           {"placement", cfg.h_op.literal_placement ? "literal" : "operator"},
           {"coefficients", coeffs},
           {"branches", branches},
           {"collapsed", H.collapsed}};
  write_file(fs::path(cfg.out_dir) / "h_op.json", out.dump(2) + "\n");
  std::cout << H.to_string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green's functions of parameter-dependent linear boundary value problems"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "problem description (JSON)")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--tol", o.tol, "integrator tolerance (overrides tolerance)");
    sub->add_option("--threads", o.threads, "worker threads (overrides threads)");
    sub->add_flag("--svg", o.svg, "also write SVG plots");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Overrides&);
  };
  const Command commands[] = {
      {"build", "build the kernel and summarise its properties", cmd_build},
      {"verify", "check the parameter-linking identities between two kernels", cmd_verify},
      {"sweep", "classify d^l g over a parameter grid", cmd_sweep},
      {"eig", "locate singular parameter values", cmd_eig},
      {"h-op", "print the operator annihilating d^l g", cmd_hop},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->run(o);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const SingularProblemError& e) {
    std::cerr << "unsolvable problem: " << e.what() << "\n";
    return kBadProblem;
  } catch (const HypothesisError& e) {
    std::cerr << "recurrence hypothesis fails: " << e.what() << "\n";
    return kBadProblem;
  } catch (const SpecError& e) {
    std::cerr << "invalid problem: " << e.what() << "\n";
    return kBadProblem;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadProblem;
  }
  return kBadConfig;
}
