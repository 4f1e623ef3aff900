// Acceptance suite: one line per criterion, exit status 1 on any unexpected failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "greenlink/greenlink.hpp"

using namespace greenlink;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuarter = kPi * kPi / 4.0;

// pinned tolerances
constexpr double kEigTol = 1e-8;
constexpr double kEigSeconds = 5.0;
constexpr double kTransitionTol = 1e-4;
constexpr double kLinkBound = 1e-6;
constexpr double kLinkSeconds = 30.0;
constexpr double kOracleTol = 1e-7;
constexpr double kMonotoneTol = 1e-8;
constexpr double kCoefTol = 1e-12;
constexpr double kHResidual = 1e-6;
constexpr double kJumpTol = 1e-6;
constexpr double kBoundaryTol = 1e-8;
constexpr double kOdeResidual = 1e-7;
constexpr double kInvariantSeconds = 60.0;
constexpr double kCoincidenceTol = 1e-4;

// Criteria whose stated inputs cannot produce the stated outputs; they still
// run and print FAIL, but do not change the exit status.
const std::set<int> kKnownUnattainable{1};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

BvpSpec beam(double M) {
  BvpSpec spec;
  spec.order = 4;
  spec.coefficients.assign(4, CoefficientFn());
  spec.M = M;
  spec.alpha = Eigen::MatrixXd::Zero(4, 4);
  spec.beta = Eigen::MatrixXd::Zero(4, 4);
  spec.alpha(0, 0) = spec.alpha(2, 2) = spec.beta(1, 0) = spec.beta(3, 2) = 1.0;
  return spec;
}

Outcome eigenvalues() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const auto res = find_eigenvalues(oracles::mixed_problem(0.0), 0.0, 60.0, 16);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double err = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double want = oracles::mixed_k0_eigenvalue(j);
    double best = INFINITY;
    for (double v : res.values) best = std::min(best, std::abs(v - want));
    err = std::max(err, best);
  }
  o.pass = res.values.size() == 3 && err <= kEigTol && secs < kEigSeconds;
  std::ostringstream d;
  d << res.values.size() << " roots on [0,60], max error " << fmt(err) << ", " << fmt(secs) << " s";
  if (!o.pass) {
    // (5 pi/2)^2 = 61.685 lies beyond 60; the widened bracket shows the root is found
    const auto wide = find_eigenvalues(oracles::mixed_problem(0.0), 0.0, 62.0, 16);
    double werr = 0.0;
    for (int j = 0; j < 3 && j < static_cast<int>(wide.values.size()); ++j)
      werr = std::max(werr, std::abs(wide.values[static_cast<std::size_t>(j)] - oracles::mixed_k0_eigenvalue(j)));
    d << "; (5pi/2)^2 = " << fmt(oracles::mixed_k0_eigenvalue(2)) << " is outside [0,60]; on [0,62]: "
      << wide.values.size() << " roots, max error " << fmt(werr);
  }
  o.detail = d.str();
  return o;
}

Outcome sign_boundary() {
  Outcome o;
  // M grid over [-10, 20] without points within 0.05 of an eigenvalue
  std::vector<double> Ms;
  for (double M : linspace(-10.0, 20.0, 61)) {
    bool near = false;
    for (int j = 0; j < 3; ++j) near = near || std::abs(M - oracles::mixed_k0_eigenvalue(j)) < 0.05;
    if (!near) Ms.push_back(M);
  }
  const auto rep = sweep(oracles::mixed_problem(0.0), Ms, {0}, Grid::clustered(0.0, 1.0, 21));
  bool exact = true;
  for (std::size_t i = 0; i < rep.M.size(); ++i) {
    const bool neg = rep.level(i, 0).set == SignSet::negative;
    if (neg != (rep.M[i] < kQuarter)) exact = false;
    if (rep.M[i] > kQuarter && rep.M[i] < 9 * kQuarter && rep.level(i, 0).set != SignSet::sign_changing) exact = false;
  }
  const auto N0 = rep.windows_for(0, SignSet::negative);
  const double transition = N0.empty() ? NAN : N0.back().upper.value;
  const double err = std::abs(transition - kQuarter);
  o.pass = exact && N0.size() == 1 && err <= kTransitionTol;
  o.detail = std::to_string(rep.M.size()) + " parameters, N_0 upper endpoint " + fmt(transition) + " (" +
             to_string(N0.empty() ? Endpoint::Kind::bracket : N0.back().upper.kind) + "), error " + fmt(err) +
             (exact ? "" : ", misclassified parameters");
  return o;
}

Outcome linking() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  struct Case {
    int k;
    double M0, M1;
  };
  const Case cases[] = {{0, -1, 1}, {0, 0, 2}, {0, -4, 2}, {1, 0, 2}, {1, -1, 3}};
  const Grid grid = Grid::off_diagonal(0.0, 1.0, 15);
  const QuadratureRule quad(2, 20);
  double worst = 0.0;
  std::string where;
  for (const auto& c : cases) {
    const GreenFunction g0(oracles::mixed_problem(c.M0, c.k));
    const GreenFunction g1(oracles::mixed_problem(c.M1, c.k));
    for (const auto& r : verify_identities(g0, g1, {0, 1}, grid, quad, default_threads()))
      if (r.max >= worst) {
        worst = r.max;
        where = std::string(to_string(r.tag)) + " k=" + std::to_string(c.k);
      }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.pass = worst <= kLinkBound && secs < kLinkSeconds;
  o.detail = "max residual " + fmt(worst) + " (" + where + "), " + fmt(secs) + " s";
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  using P = oracles::ClosedFormKernel::Problem;
  const std::pair<P, double> cases[] = {{P::mixed_k1, 0.0}, {P::mixed_k1, 1e-9}, {P::mixed_k1, 2.0},
                                        {P::mixed_k0, 0.0}, {P::mixed_k0, 1.0},  {P::mixed_k0, -3.0}};
  const Grid grid = Grid::uniform(0.0, 1.0, 40);
  double worst = 0.0;
  for (const auto& [p, M] : cases) {
    const oracles::ClosedFormKernel ref(p, M);
    const GreenFunction g(ref.spec());
    const auto v = g.eval_grid(grid.t, grid.s, 0);
    for (std::size_t j = 0; j < grid.s.size(); ++j)
      for (std::size_t i = 0; i < grid.t.size(); ++i)
        worst = std::max(worst, std::abs(v[j * grid.t.size() + i] - ref(grid.t[i], grid.s[j])));
  }
  o.pass = worst <= kOracleTol;
  o.detail = "6 parameters, 40x40 grid, max deviation " + fmt(worst);
  return o;
}

Outcome monotone() {
  Outcome o;
  const Grid grid = Grid::uniform(0.0, 1.0, 21);
  auto worst_step = [&](const std::vector<double>& Ms, int l) {
    double worst = -INFINITY;
    std::vector<double> prev;
    for (double M : Ms) {
      const GreenFunction g(oracles::mixed_problem(M));
      std::vector<double> cur;
      for (double s : grid.s)
        for (double t : grid.t)
          cur.push_back(t == s && l >= 1 ? NAN : g.eval(t, s, l));
      for (std::size_t i = 0; i < prev.size(); ++i)
        if (!std::isnan(cur[i])) worst = std::max(worst, cur[i] - prev[i]);
      prev = std::move(cur);
    }
    return worst;
  };
  const double w0 = worst_step(linspace(-9.5, 2.4, 10), 0);
  const double w1 = worst_step(linspace(0.2, 2.4, 6), 1);
  bool changing = true;
  for (double M : {-8.0, -2.0, -0.3}) {
    const auto e = classify_parameter(oracles::mixed_problem(0.0), M, {1}, grid, {}, false);
    changing = changing && e.levels[0].set == SignSet::sign_changing;
  }
  o.pass = w0 <= kMonotoneTol && w1 <= kMonotoneTol && changing;
  o.detail = "largest increase g " + fmt(w0) + ", d_t g " + fmt(w1) + "; d_t g sign-changing for M < 0: " +
             (changing ? "yes" : "no");
  return o;
}

Outcome trichotomy() {
  Outcome o;
  const GreenFunction g0(oracles::mixed_problem(0.0, 1));
  const GreenFunction g1(oracles::mixed_problem(2.0, 1));
  const auto rep = compare_kernels(g0, g1, 1, Grid::uniform(0.0, 1.0, 21));
  std::size_t above = 0, below = 0, bad = 0;
  for (const auto& p : rep.points) {
    if (p.t > p.s) {
      ++above;
      bad += p.verdict != Verdict::case2;
    } else {
      ++below;
      bad += p.verdict != Verdict::case3;
    }
  }
  o.pass = bad == 0 && above > 0 && below > 0 && rep.decreasing;
  o.detail = std::to_string(rep.count(Verdict::case2)) + "/" + std::to_string(above) + " case-2 above, " +
             std::to_string(rep.count(Verdict::case3)) + "/" + std::to_string(below) + " case-3 below, hypothesis " +
             to_string(rep.hypothesis);
  return o;
}

Outcome recurrence() {
  Outcome o;
  BvpSpec spec = oracles::mixed_problem(0.0);
  spec.coefficients[1] = CoefficientFn::polynomial({1.0, 1.0});
  const auto H = build_H(spec, 1);
  double coef = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = (i + 0.5) / 100.0;
    coef = std::max(coef, std::abs(H.coefficient(1)(t) + 1.0 / (1.0 + t)));
    coef = std::max(coef, std::abs(H.coefficient(2)(t) - (1.0 + t)));
  }
  const GreenFunction g(spec);
  double res = 0.0;
  for (double s : {0.2, 0.5, 0.8})
    for (double t : {0.05, 0.35, 0.65, 0.95}) res = std::max(res, std::abs(H_residual(H, g, 1, t, s)));
  bool collapses = true;
  for (const auto& c : {oracles::mixed_problem(3.0, 0), oracles::mixed_problem(-2.0, 1), beam(10.0)})
    for (int l = 1; l < c.order; ++l) {
      const auto Hc = build_H(c, l);
      const auto H0 = build_H(c, 0);
      collapses = collapses && Hc.collapsed;
      for (int j = 1; j <= c.order; ++j)
        collapses = collapses && Hc.coefficient(j).to_string() == H0.coefficient(j).to_string();
    }
  o.pass = coef <= kCoefTol && res <= kHResidual && collapses;
  o.detail = "coefficient error " + fmt(coef) + ", H residual " + fmt(res) + ", constant coefficients collapse: " +
             (collapses ? "yes" : "no");
  return o;
}

Outcome invariants() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  std::vector<BvpSpec> specs;
  for (double M : {-5.0, 0.0, 1.0, 10.0, 30.0}) specs.push_back(oracles::mixed_problem(M, 0));
  for (double M : {-3.0, -1.0, 0.0, 2.0, 5.0}) specs.push_back(oracles::mixed_problem(M, 1));
  for (double M : {-200.0, -50.0, 0.0, 100.0, 500.0}) specs.push_back(beam(M));
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  double jump = 0.0, boundary = 0.0, ode = 0.0;
  for (const auto& spec : specs) {
    const GreenFunction g(spec);
    for (int rep = 0; rep < 50; ++rep) {
      const double s = unit(rng);
      jump = std::max(jump, std::abs(g.measured_jump(s) - 1.0));
      boundary = std::max(boundary, g.boundary_residual(s));
      for (double t : {0.0, 0.5 * s, 0.5 * (1.0 + s), 1.0})
        if (t != s) ode = std::max(ode, std::abs(g.ode_residual(t, s)));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.pass = jump <= kJumpTol && boundary <= kBoundaryTol && ode <= kOdeResidual && secs < kInvariantSeconds;
  o.detail = "jump error " + fmt(jump) + ", boundary " + fmt(boundary) + ", ODE residual " + fmt(ode) + ", " +
             fmt(secs) + " s";
  return o;
}

Outcome coincidence() {
  Outcome o;
  // the second-order Dirichlet problem has no P_0 window; the simply supported
  // beam has both, meeting at -pi^4
  const auto rep = sweep(beam(0.0), linspace(-400.0, 1100.0, 31), {0}, Grid::clustered(0.0, 1.0, 21));
  const auto dir = sweep(oracles::dirichlet_problem(0.0), linspace(-20.0, 60.0, 33), {0}, Grid::clustered(0.0, 1.0, 21));
  const bool has = rep.coincidence_gap.has_value();
  o.pass = has && *rep.coincidence_gap <= kCoincidenceTol;
  std::ostringstream d;
  d << "beam u''''+Mu: ";
  if (has) {
    d << "sup N_0 = " << fmt(rep.windows_for(0, SignSet::negative).back().upper.value)
      << ", inf P_0 = " << fmt(rep.windows_for(0, SignSet::positive).front().lower.value) << ", gap "
      << fmt(*rep.coincidence_gap);
  } else {
    d << "windows not both found";
  }
  d << "; Dirichlet u''+Mu P_0 windows: " << dir.windows_for(0, SignSet::positive).size();
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "eigenvalue reproduction", eigenvalues}, {2, "sign boundary", sign_boundary},
      {3, "linking identities", linking},          {4, "oracle equivalence", oracle_equivalence},
      {5, "monotone dependence", monotone},        {6, "trichotomy", trichotomy},
      {7, "recurrence", recurrence},               {8, "definitional invariants", invariants},
      {9, "endpoint coincidence", coincidence},
  };
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known = kKnownUnattainable.count(c.id) > 0;
    const char* tag = o.pass ? (known ? "XPASS" : "PASS") : "FAIL";
    if (!o.pass && !known) ++unexpected;
    std::printf("%-5s %d %s: %s [%.2f s]%s\n", tag, c.id, c.name, o.detail.c_str(), secs,
                !o.pass && known ? " (known unattainable)" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
