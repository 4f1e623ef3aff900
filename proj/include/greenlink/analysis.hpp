#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greenlink/bvp.hpp"
#include "greenlink/errors.hpp"
#include "greenlink/green.hpp"
#include "greenlink/grid.hpp"
#include "greenlink/parallel.hpp"

namespace greenlink {

// ---------------------------------------------------------------------------
// Singular parameter values

struct EigenvalueOptions {
  int scan_points = 0;  // 0 picks 20 per unit of bracket width, clamped to [200, 4000]
  double root_tol = 1e-10;
  double ode_tol = kDefaultTolerance;
  unsigned threads = 1;
};

struct EigenvalueResult {
  std::vector<double> values;
  std::vector<std::pair<double, double>> brackets;  // scan cell holding each root
  bool truncated = false;
};

inline double characteristic_determinant(const BvpSpec& spec, double M, double ode_tol = kDefaultTolerance) {
  return check_solvability(with_parameter(spec, M), ode_tol).determinant;
}

/// Values of M in [lo, hi] where the characteristic determinant changes sign,
/// refined by bisection. For k = 0 these are the eigenvalues of T u = lambda u
/// up to the shift lambda = M_bar - M.
inline EigenvalueResult find_eigenvalues(const BvpSpec& spec, double lo, double hi, int max_count,
                                         const EigenvalueOptions& opt = {}) {
  spec.validate();
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw SpecError("eigenvalue bracket must be finite with lo < hi");
  if (max_count < 1) throw SpecError("max_count must be positive");
  const int points = opt.scan_points > 0
                         ? opt.scan_points
                         : std::clamp(static_cast<int>(std::ceil(20.0 * (hi - lo))), 200, 4000);
  std::vector<double> M(static_cast<std::size_t>(points) + 1);
  for (int i = 0; i <= points; ++i) M[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / points;
  M.back() = hi;
  std::vector<double> D(M.size());
  parallel_for(M.size(), opt.threads, [&](std::size_t i) { D[i] = characteristic_determinant(spec, M[i], opt.ode_tol); });

  std::vector<std::pair<double, double>> cells;
  for (std::size_t i = 0; i + 1 < M.size(); ++i) {
    if (D[i] == 0.0) {
      cells.emplace_back(M[i], M[i]);
    } else if (D[i + 1] != 0.0 && (D[i] < 0.0) != (D[i + 1] < 0.0)) {
      cells.emplace_back(M[i], M[i + 1]);
    }
  }
  if (D.back() == 0.0) cells.emplace_back(M.back(), M.back());

  EigenvalueResult out;
  if (static_cast<int>(cells.size()) > max_count) {
    out.truncated = true;
    cells.resize(static_cast<std::size_t>(max_count));
  }
  out.values.resize(cells.size());
  out.brackets = cells;
  parallel_for(cells.size(), opt.threads, [&](std::size_t c) {
    double x0 = cells[c].first;
    double x1 = cells[c].second;
    if (x0 == x1) {
      out.values[c] = x0;
      return;
    }
    double f0 = characteristic_determinant(spec, x0, opt.ode_tol);
    while (x1 - x0 > opt.root_tol) {
      const double mid = 0.5 * (x0 + x1);
      if (mid <= x0 || mid >= x1) break;
      const double fm = characteristic_determinant(spec, mid, opt.ode_tol);
      if (fm == 0.0) {
        x0 = x1 = mid;
        break;
      }
      if ((fm < 0.0) == (f0 < 0.0)) {
        x0 = mid;
        f0 = fm;
      } else {
        x1 = mid;
      }
    }
    out.values[c] = 0.5 * (x0 + x1);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Strong sign

struct StrongSignWitness {
  enum class Sign { positive, negative };
  Sign sign = Sign::negative;
  std::vector<double> t;
  std::vector<double> phi;
  std::vector<double> s;
  std::vector<double> k1;
  std::vector<double> k2;
  double margin = 0.0;  // min_s k1(s) (positive) or min_s -k2(s) (negative)
};

inline const char* to_string(StrongSignWitness::Sign s) {
  return s == StrongSignWitness::Sign::positive ? "positive" : "negative";
}

inline constexpr double kWitnessMargin = 1e-12;

/// Constructs phi(t) = |g(t, s_mid)| and the envelopes k1(s) = min_t g/phi,
/// k2(s) = max_t g/phi over the interior of the grid. A witness is returned
/// only when both envelopes stay on one side of zero with positive margin.
inline std::optional<StrongSignWitness> strong_sign_witness(const GreenFunction& g, const Grid& grid,
                                                            unsigned threads = 1) {
  const auto& spec = g.spec();
  StrongSignWitness w;
  for (double t : grid.t)
    if (t > spec.a && t < spec.b) w.t.push_back(t);
  for (double s : grid.s)
    if (s > spec.a && s < spec.b) w.s.push_back(s);
  if (w.t.empty() || w.s.empty()) return std::nullopt;
  const double s_mid = 0.5 * (spec.a + spec.b);
  w.phi = g.eval_column(w.t, s_mid, 0, Side::left);
  for (double& p : w.phi) {
    p = std::abs(p);
    if (!(p > 0.0)) return std::nullopt;
  }
  w.k1.assign(w.s.size(), 0.0);
  w.k2.assign(w.s.size(), 0.0);
  parallel_for(w.s.size(), threads, [&](std::size_t j) {
    const auto col = g.eval_column(w.t, w.s[j], 0, Side::left);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double q = col[i] / w.phi[i];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    w.k1[j] = lo;
    w.k2[j] = hi;
  });
  const bool positive = *std::min_element(w.k1.begin(), w.k1.end()) > kWitnessMargin;
  const bool negative = *std::max_element(w.k2.begin(), w.k2.end()) < -kWitnessMargin;
  if (!positive && !negative) return std::nullopt;
  w.sign = positive ? StrongSignWitness::Sign::positive : StrongSignWitness::Sign::negative;
  // the envelopes must differ strictly; a constant ratio gets widened
  for (std::size_t j = 0; j < w.s.size(); ++j) {
    if (w.k1[j] < w.k2[j]) continue;
    if (positive)
      w.k2[j] *= 2.0;
    else
      w.k1[j] *= 2.0;
  }
  w.margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < w.s.size(); ++j) w.margin = std::min(w.margin, positive ? w.k1[j] : -w.k2[j]);
  return w;
}

// ---------------------------------------------------------------------------
// Parameter sweep

enum class SignSet { positive, negative, sign_changing, not_solvable, indeterminate };

inline const char* to_string(SignSet c) {
  switch (c) {
    case SignSet::positive:
      return "P";
    case SignSet::negative:
      return "N";
    case SignSet::sign_changing:
      return "sign-changing";
    case SignSet::not_solvable:
      return "not-uniquely-solvable";
    case SignSet::indeterminate:
      return "indeterminate";
  }
  return "?";
}

struct SweepOptions {
  double sign_tol = 1e-9;      // relative to max(1, max |value|) on the grid
  double bisect_tol = 1e-6;    // endpoint refinement
  double monotone_tol = 1e-9;  // steps against the predicted direction up to 10x this pass, same scaling
  double ode_tol = kDefaultTolerance;
  int max_eigenvalues = 64;
  bool refine_endpoints = true;
  unsigned threads = 1;
};

struct LevelSample {
  int l = 0;
  SignSet set = SignSet::indeterminate;
  double min = 0.0;
  double max = 0.0;
};

struct SweepEntry {
  double M = 0.0;
  double determinant = 0.0;
  bool solvable = false;
  double max_abs_g = 0.0;  // diagnostic for blow-up near singular values
  std::vector<LevelSample> levels;
  LevelSample reference;  // d^k g, used for monotonicity direction
  std::vector<std::vector<double>> values;  // per level, grid samples
};

struct Endpoint {
  enum class Kind { open, closed, bracket };
  double value = 0.0;
  Kind kind = Kind::bracket;
};

inline const char* to_string(Endpoint::Kind k) {
  switch (k) {
    case Endpoint::Kind::open:
      return "open";
    case Endpoint::Kind::closed:
      return "closed";
    case Endpoint::Kind::bracket:
      return "bracket";
  }
  return "?";
}

/// A maximal run of consecutive grid parameters in P_l or N_l.
struct SignWindow {
  int l = 0;
  SignSet set = SignSet::positive;
  std::size_t first = 0;
  std::size_t last = 0;
  Endpoint lower;
  Endpoint upper;
};

struct MonotoneCheck {
  int l = 0;
  double M_lo = 0.0;
  double M_hi = 0.0;
  bool nonincreasing = true;
  double worst = 0.0;  // largest step against the predicted direction
  double t = 0.0;
  double s = 0.0;
  bool ok = true;
};

struct SweepReport {
  std::vector<double> M;
  std::vector<int> orders;
  std::string grid;
  std::vector<SweepEntry> entries;
  EigenvalueResult eigenvalues;
  std::vector<SignWindow> windows;
  std::vector<MonotoneCheck> monotone;
  std::optional<double> coincidence_gap;  // |sup N_0 - inf P_0| when both are found

  const LevelSample& level(std::size_t entry, int l) const {
    for (const auto& lv : entries.at(entry).levels)
      if (lv.l == l) return lv;
    throw SpecError("order not part of the sweep");
  }

  std::vector<SignWindow> windows_for(int l, SignSet set) const {
    std::vector<SignWindow> out;
    for (const auto& w : windows)
      if (w.l == l && w.set == set) out.push_back(w);
    return out;
  }
};

namespace detail {

// ">= 0" is read as ">= -tol * max(1, max |v|)", so rounding in very large
// kernels (near singular parameters) does not register as a sign change.
inline LevelSample classify_values(int l, const std::vector<double>& v, double tol) {
  LevelSample out;
  out.l = l;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    if (std::isnan(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo > hi) return out;
  out.min = lo;
  out.max = hi;
  const double scaled = tol * std::max({1.0, std::abs(lo), std::abs(hi)});
  const bool nonneg = lo >= -scaled;
  const bool nonpos = hi <= scaled;
  if (nonneg && nonpos)
    out.set = SignSet::indeterminate;
  else if (nonneg)
    out.set = SignSet::positive;
  else if (nonpos)
    out.set = SignSet::negative;
  else
    out.set = SignSet::sign_changing;
  return out;
}

}  // namespace detail

/// Classification of d^l g[M] over a grid, for one parameter value.
inline SweepEntry classify_parameter(const BvpSpec& family, double M, const std::vector<int>& orders, const Grid& grid,
                                     const SweepOptions& opt, bool keep_values = false) {
  SweepEntry e;
  e.M = M;
  const BvpSpec spec = with_parameter(family, M);
  auto mark_all = [&](SignSet set) {
    for (int l : orders) e.levels.push_back({l, set, 0.0, 0.0});
    e.reference = {spec.k, set, 0.0, 0.0};
  };
  std::unique_ptr<GreenFunction> g;
  try {
    g = std::make_unique<GreenFunction>(spec, opt.ode_tol);
    e.determinant = g->certificate().determinant;
  } catch (const SingularProblemError& err) {
    e.determinant = err.determinant();
    mark_all(SignSet::not_solvable);
    return e;
  } catch (const IntegrationError&) {
    mark_all(SignSet::indeterminate);
    return e;
  }
  e.solvable = true;
  for (int l : orders) {
    auto v = g->eval_grid(grid.t, grid.s, l);
    e.levels.push_back(detail::classify_values(l, v, opt.sign_tol));
    if (l == 0)
      for (double x : v)
        if (!std::isnan(x)) e.max_abs_g = std::max(e.max_abs_g, std::abs(x));
    if (keep_values) e.values.push_back(std::move(v));
  }
  e.reference = detail::classify_values(spec.k, g->eval_grid(grid.t, grid.s, spec.k), opt.sign_tol);
  return e;
}

namespace detail {

inline SignSet set_at(const BvpSpec& family, double M, int l, const Grid& grid, const SweepOptions& opt) {
  return classify_parameter(family, M, {l}, grid, opt).levels.front().set;
}

// Boundary of a constant-sign run between x_out (outside) and x_in (inside).
inline Endpoint locate_endpoint(const BvpSpec& family, int l, SignSet set, double x_out, double x_in,
                                const std::vector<double>& eigenvalues, const Grid& grid, const SweepOptions& opt) {
  const double lo = std::min(x_out, x_in);
  const double hi = std::max(x_out, x_in);
  for (double lambda : eigenvalues) {
    if (lambda <= lo || lambda >= hi) continue;
    const double dir = x_in > lambda ? 1.0 : -1.0;
    const double probe = lambda + dir * std::min(opt.bisect_tol, 0.5 * std::abs(x_in - lambda));
    if (set_at(family, probe, l, grid, opt) == set) return {lambda, Endpoint::Kind::open};
    x_out = probe;
  }
  if (!opt.refine_endpoints) return {x_in, Endpoint::Kind::closed};
  while (std::abs(x_in - x_out) > opt.bisect_tol) {
    const double mid = 0.5 * (x_in + x_out);
    if (set_at(family, mid, l, grid, opt) == set)
      x_in = mid;
    else
      x_out = mid;
  }
  return {x_in, Endpoint::Kind::closed};
}

}  // namespace detail

/// Sweeps M over `Ms`, classifies d^l g for each l in `orders`, locates the
/// endpoints of the constant-sign windows and checks monotone dependence
/// between consecutive parameters inside a window.
inline SweepReport sweep(const BvpSpec& family, std::vector<double> Ms, const std::vector<int>& orders, const Grid& grid,
                         const SweepOptions& opt = {}) {
  family.validate();
  if (Ms.empty()) throw SpecError("empty M grid");
  if (orders.empty()) throw SpecError("no derivative orders requested");
  for (int l : orders)
    if (l < 0 || l > family.order - 1) throw UnsupportedOrderError("sweep orders must lie in 0..n-1");
  std::sort(Ms.begin(), Ms.end());
  Ms.erase(std::unique(Ms.begin(), Ms.end()), Ms.end());

  SweepReport rep;
  rep.M = Ms;
  rep.orders = orders;
  rep.grid = grid.description;
  if (Ms.size() > 1) {
    EigenvalueOptions eo;
    eo.ode_tol = opt.ode_tol;
    eo.threads = opt.threads;
    rep.eigenvalues = find_eigenvalues(family, Ms.front(), Ms.back(), opt.max_eigenvalues, eo);
  }

  rep.entries.resize(Ms.size());
  parallel_for(Ms.size(), opt.threads,
               [&](std::size_t i) { rep.entries[i] = classify_parameter(family, Ms[i], orders, grid, opt, true); });

  // windows
  struct Pending {
    int l;
    SignSet set;
    std::size_t first, last;
  };
  std::vector<Pending> runs;
  for (std::size_t li = 0; li < orders.size(); ++li) {
    std::size_t i = 0;
    while (i < Ms.size()) {
      const SignSet set = rep.entries[i].levels[li].set;
      std::size_t j = i;
      while (j + 1 < Ms.size() && rep.entries[j + 1].levels[li].set == set) ++j;
      if (set == SignSet::positive || set == SignSet::negative) runs.push_back({orders[li], set, i, j});
      i = j + 1;
    }
  }
  rep.windows.resize(runs.size());
  parallel_for(runs.size(), opt.threads, [&](std::size_t r) {
    const auto& run = runs[r];
    SignWindow w{run.l, run.set, run.first, run.last, {Ms[run.first], Endpoint::Kind::bracket},
                 {Ms[run.last], Endpoint::Kind::bracket}};
    if (run.first > 0)
      w.lower = detail::locate_endpoint(family, run.l, run.set, Ms[run.first - 1], Ms[run.first],
                                        rep.eigenvalues.values, grid, opt);
    if (run.last + 1 < Ms.size())
      w.upper = detail::locate_endpoint(family, run.l, run.set, Ms[run.last + 1], Ms[run.last], rep.eigenvalues.values,
                                        grid, opt);
    rep.windows[r] = w;
  });

  // endpoint coincidence for l = 0
  const auto N0 = rep.windows_for(0, SignSet::negative);
  const auto P0 = rep.windows_for(0, SignSet::positive);
  if (!N0.empty() && !P0.empty()) rep.coincidence_gap = std::abs(N0.back().upper.value - P0.front().lower.value);

  // monotone dependence inside windows
  for (std::size_t li = 0; li < orders.size(); ++li) {
    const int l = orders[li];
    for (std::size_t i = 0; i + 1 < Ms.size(); ++i) {
      const auto& e0 = rep.entries[i];
      const auto& e1 = rep.entries[i + 1];
      const SignSet s0 = e0.levels[li].set;
      if (s0 != e1.levels[li].set || (s0 != SignSet::positive && s0 != SignSet::negative)) continue;
      const SignSet r0 = e0.reference.set;
      if (r0 != e1.reference.set || (r0 != SignSet::positive && r0 != SignSet::negative)) continue;
      bool crosses = false;
      for (double lambda : rep.eigenvalues.values) crosses = crosses || (lambda > e0.M && lambda < e1.M);
      if (crosses) continue;
      MonotoneCheck c;
      c.l = l;
      c.M_lo = e0.M;
      c.M_hi = e1.M;
      c.nonincreasing = r0 == s0;
      c.worst = -std::numeric_limits<double>::infinity();
      const auto& v0 = e0.values[li];
      const auto& v1 = e1.values[li];
      double scale = 1.0;
      for (const auto* lv : {&e0.levels[li], &e1.levels[li]})
        scale = std::max({scale, std::abs(lv->min), std::abs(lv->max)});
      for (std::size_t p = 0; p < v0.size(); ++p) {
        if (std::isnan(v0[p]) || std::isnan(v1[p])) continue;
        const double step = c.nonincreasing ? v1[p] - v0[p] : v0[p] - v1[p];
        if (step > c.worst) {
          c.worst = step;
          c.t = grid.t[p % grid.t.size()];
          c.s = grid.s[p / grid.t.size()];
        }
      }
      c.ok = c.worst <= 10.0 * opt.monotone_tol * scale;
      rep.monotone.push_back(c);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Zeros of d^l g(., s)

enum class Half { left, right };

struct ZeroCount {
  bool identically_zero = false;
  int count = 0;
};

/// Sign changes of d^l g(., s) on [a,s) or (s,b]. Each change found on the
/// coarse grid is resampled once to catch clustered zeros.
inline ZeroCount zero_count(const GreenFunction& g, int l, double s, Half half, int density = 400) {
  const auto& spec = g.spec();
  if (l < 0 || l > g.order() - 1) throw UnsupportedOrderError("zero_count needs 0 <= l <= n-1");
  if (density < 2) throw SpecError("zero_count density must be at least 2");
  const double lo = half == Half::left ? spec.a : s;
  const double hi = half == Half::left ? s : spec.b;
  ZeroCount out;
  if (!(hi > lo)) {
    out.identically_zero = true;
    return out;
  }
  auto points = [&](double x0, double x1, int m) {
    std::vector<double> ts;
    for (int i = 0; i <= m; ++i) {
      double t = x0 + (x1 - x0) * i / m;
      if (half == Half::left && t >= s) continue;
      if (half == Half::right && t <= s) continue;
      ts.push_back(t);
    }
    return ts;
  };
  const auto ts = points(lo, hi, density);
  const auto v = g.eval_column(ts, s, l);
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale < kVanishThreshold) {
    out.identically_zero = true;
    return out;
  }
  const double floor = 1e-12 * std::max(1.0, scale);
  auto sign_of = [floor](double x) { return std::abs(x) <= floor ? 0 : (x > 0.0 ? 1 : -1); };
  int prev = 0;
  std::size_t prev_i = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int sg = sign_of(v[i]);
    if (sg == 0) continue;
    if (prev != 0 && sg != prev) {
      // refine between the two samples carrying opposite signs
      const auto sub = points(ts[prev_i], ts[i], 32);
      const auto sv = g.eval_column(sub, s, l);
      int p = 0;
      int changes = 0;
      for (double x : sv) {
        const int q = sign_of(x);
        if (q == 0) continue;
        if (p != 0 && q != p) ++changes;
        p = q;
      }
      out.count += std::max(1, changes);
    }
    prev = sg;
    prev_i = i;
  }
  return out;
}

}  // namespace greenlink
