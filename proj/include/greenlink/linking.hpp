#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "greenlink/errors.hpp"
#include "greenlink/green.hpp"
#include "greenlink/grid.hpp"
#include "greenlink/parallel.hpp"
#include "greenlink/quadrature.hpp"

namespace greenlink {

/// Which kernel sits inside the integral next to the differentiated one.
///   first:  int d^l g[M0](t,r) d^k g[M1](r,s) dr
///   second: int d^l g[M1](t,r) d^k g[M0](r,s) dr
enum class Variant { first, second };

enum class IdentityTag { link_0, link_1, dlink_1, dlink_2, dlink_n_1, dlink_n_2, cross, cross_n };

inline constexpr std::array<IdentityTag, 8> kAllIdentityTags{
    IdentityTag::link_0,    IdentityTag::link_1,    IdentityTag::dlink_1, IdentityTag::dlink_2,
    IdentityTag::dlink_n_1, IdentityTag::dlink_n_2, IdentityTag::cross,   IdentityTag::cross_n};

inline const char* to_string(IdentityTag tag) {
  switch (tag) {
    case IdentityTag::link_0:
      return "link-0";
    case IdentityTag::link_1:
      return "link-1";
    case IdentityTag::dlink_1:
      return "dlink-1";
    case IdentityTag::dlink_2:
      return "dlink-2";
    case IdentityTag::dlink_n_1:
      return "dlink-n-1";
    case IdentityTag::dlink_n_2:
      return "dlink-n-2";
    case IdentityTag::cross:
      return "cross";
    case IdentityTag::cross_n:
      return "cross-n";
  }
  return "?";
}

struct ResidualReport {
  struct Sample {
    double t;
    double s;
    double residual;
  };

  IdentityTag tag = IdentityTag::link_0;
  std::string grid;
  double max = 0.0;
  double mean = 0.0;
  double t_at_max = 0.0;
  double s_at_max = 0.0;
  std::vector<Sample> samples;

  void finalize() {
    max = 0.0;
    mean = 0.0;
    for (const auto& p : samples) {
      const double r = std::abs(p.residual);
      mean += r;
      if (r >= max) {
        max = r;
        t_at_max = p.t;
        s_at_max = p.s;
      }
    }
    if (!samples.empty()) mean /= static_cast<double>(samples.size());
  }
};

namespace detail {

inline void require_family(const GreenFunction& g0, const GreenFunction& g1) {
  if (!same_family(g0.spec(), g1.spec()))
    throw SpecError("kernels must share order, interval, coefficients, k and boundary conditions");
}

/// int_a^b d^lA gA(t,r) d^kB gB(r,s) dr with breakpoints at r = t and r = s.
inline double product_integral(const GreenFunction& gA, int lA, double t, const GreenFunction& gB, int kB, double s,
                               const QuadratureRule& quad) {
  const auto& spec = gA.spec();
  const auto nodes = quad.nodes(spec.a, spec.b, {t, s});
  std::vector<double> xs;
  xs.reserve(nodes.size());
  for (const auto& nd : nodes) xs.push_back(nd.x);
  const auto row = gA.eval_row(t, xs, lA);
  const auto col = gB.eval_column(xs, s, kB);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += nodes[i].w * row[i] * col[i];
  return acc;
}

inline std::pair<const GreenFunction*, const GreenFunction*> roles(const GreenFunction& g0, const GreenFunction& g1,
                                                                   Variant v) {
  return v == Variant::first ? std::pair{&g0, &g1} : std::pair{&g1, &g0};
}

}  // namespace detail

/// Residual of the parameter-linking identity for d^l g, 0 <= l <= n-1:
///   d^l g1(t,s) - d^l g0(t,s) - (M0 - M1) int d^l gA(t,r) d^k gB(r,s) dr.
inline double linking_residual(const GreenFunction& g0, const GreenFunction& g1, int l, Variant variant, double t,
                               double s, const QuadratureRule& quad) {
  detail::require_family(g0, g1);
  const int n = g0.order();
  if (l < 0 || l > n - 1) throw UnsupportedOrderError("linking_residual needs 0 <= l <= n-1");
  if (l == n - 1 && t == s) throw SpecError("order n-1 identity excludes the diagonal");
  const double dM = g0.M() - g1.M();
  const double diff = g1.eval(t, s, l) - g0.eval(t, s, l);
  if (dM == 0.0) return diff;
  const auto [gA, gB] = detail::roles(g0, g1, variant);
  return diff - dM * detail::product_integral(*gA, l, t, *gB, g0.spec().k, s, quad);
}

/// Order-n version, which carries the extra term (M0 - M1) d^k gB(t,s).
inline double linking_residual_order_n(const GreenFunction& g0, const GreenFunction& g1, Variant variant, double t,
                                       double s, const QuadratureRule& quad) {
  detail::require_family(g0, g1);
  if (t == s) throw SpecError("order n identity excludes the diagonal");
  const int n = g0.order();
  const int k = g0.spec().k;
  const double dM = g0.M() - g1.M();
  const double diff = g1.eval(t, s, n) - g0.eval(t, s, n);
  if (dM == 0.0) return diff;
  const auto [gA, gB] = detail::roles(g0, g1, variant);
  return diff - dM * detail::product_integral(*gA, n, t, *gB, k, s, quad) - dM * gB->eval(t, s, k);
}

/// Difference of the two integral forms; for l = n the d^k g(t,s) terms are added.
inline double cross_identity_residual(const GreenFunction& g0, const GreenFunction& g1, int l, double t, double s,
                                      const QuadratureRule& quad) {
  detail::require_family(g0, g1);
  const int n = g0.order();
  const int k = g0.spec().k;
  if (l < 0 || l > n) throw UnsupportedOrderError("cross identity needs 0 <= l <= n");
  if (l >= n - 1 && t == s) throw SpecError("cross identity of order >= n-1 excludes the diagonal");
  if (g0.M() == g1.M()) return 0.0;
  double lhs = detail::product_integral(g0, l, t, g1, k, s, quad);
  double rhs = detail::product_integral(g1, l, t, g0, k, s, quad);
  if (l == n) {
    lhs += g1.eval(t, s, k);
    rhs += g0.eval(t, s, k);
  }
  return lhs - rhs;
}

/// The three quantities whose signs coincide whenever M0 != M1:
/// d^l g1 - d^l g0, and (M0 - M1) times each integral form.
struct SignTriple {
  double difference;
  double first;
  double second;
};

inline SignTriple sign_triple(const GreenFunction& g0, const GreenFunction& g1, int l, double t, double s,
                              const QuadratureRule& quad) {
  detail::require_family(g0, g1);
  const int k = g0.spec().k;
  const double dM = g0.M() - g1.M();
  return {g1.eval(t, s, l) - g0.eval(t, s, l), dM * detail::product_integral(g0, l, t, g1, k, s, quad),
          dM * detail::product_integral(g1, l, t, g0, k, s, quad)};
}

/// All eight identities over a grid. Tags dlink-1/dlink-2/cross report the
/// worst residual over `orders` at each point; diagonal points are skipped
/// for identities whose order reaches n-1.
inline std::vector<ResidualReport> verify_identities(const GreenFunction& g0, const GreenFunction& g1,
                                                     const std::vector<int>& orders, const Grid& grid,
                                                     const QuadratureRule& quad, unsigned threads = 1) {
  detail::require_family(g0, g1);
  const int n = g0.order();
  for (int l : orders)
    if (l < 0 || l > n - 1) throw UnsupportedOrderError("identity orders must lie in 0..n-1");
  struct Point {
    double t, s;
  };
  std::vector<Point> points;
  for (double s : grid.s)
    for (double t : grid.t) points.push_back({t, s});

  constexpr double kSkip = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::array<double, 8>> values(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const double t = points[i].t;
    const double s = points[i].s;
    const bool diag = t == s;
    auto worst = [&](auto&& f) {
      double w = diag ? kSkip : 0.0;
      for (int l : orders) {
        if (diag && l >= n - 1) continue;
        const double r = f(l);
        if (std::isnan(w) || std::abs(r) > std::abs(w)) w = r;
      }
      return w;
    };
    auto& v = values[i];
    const bool l0_ok = !(diag && n == 1);
    v[0] = l0_ok ? linking_residual(g0, g1, 0, Variant::first, t, s, quad) : kSkip;
    v[1] = l0_ok ? linking_residual(g0, g1, 0, Variant::second, t, s, quad) : kSkip;
    v[2] = worst([&](int l) { return linking_residual(g0, g1, l, Variant::first, t, s, quad); });
    v[3] = worst([&](int l) { return linking_residual(g0, g1, l, Variant::second, t, s, quad); });
    v[4] = diag ? kSkip : linking_residual_order_n(g0, g1, Variant::first, t, s, quad);
    v[5] = diag ? kSkip : linking_residual_order_n(g0, g1, Variant::second, t, s, quad);
    v[6] = worst([&](int l) { return cross_identity_residual(g0, g1, l, t, s, quad); });
    v[7] = diag ? kSkip : cross_identity_residual(g0, g1, n, t, s, quad);
  });

  std::vector<ResidualReport> reports;
  for (std::size_t tag = 0; tag < kAllIdentityTags.size(); ++tag) {
    ResidualReport r;
    r.tag = kAllIdentityTags[tag];
    r.grid = grid.description;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!std::isnan(values[i][tag])) r.samples.push_back({points[i].t, points[i].s, values[i][tag]});
    r.finalize();
    reports.push_back(std::move(r));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Pointwise comparison of d^l g[M0] and d^l g[M1].

enum class Hypothesis { same_sign_i, same_sign_ii, opposite_sign_i, opposite_sign_ii, violated };

inline const char* to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::same_sign_i:
      return "same-sign (i)";
    case Hypothesis::same_sign_ii:
      return "same-sign (ii)";
    case Hypothesis::opposite_sign_i:
      return "opposite-sign (i)";
    case Hypothesis::opposite_sign_ii:
      return "opposite-sign (ii)";
    case Hypothesis::violated:
      return "violated";
  }
  return "?";
}

enum class Verdict { case1, case2, case3, indeterminate, violation };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::case1:
      return "case-1";
    case Verdict::case2:
      return "case-2";
    case Verdict::case3:
      return "case-3";
    case Verdict::indeterminate:
      return "indeterminate";
    case Verdict::violation:
      return "violation";
  }
  return "?";
}

struct ComparisonOptions {
  double sign_tol = 1e-9;
  double vanish_tol = kVanishThreshold;
  double strict_margin = 10.0 * (1e-10 + 1e-10);  // 10 x (quadrature + solve tolerance)
  int half_samples = 32;                           // extra samples per half-interval
  unsigned threads = 1;
};

struct ComparisonReport {
  struct Point {
    double t;
    double s;
    Verdict verdict;
    double margin;  // signed gap in the predicted direction
  };

  Hypothesis hypothesis = Hypothesis::violated;
  bool decreasing = true;  // predicted d^l g[M1] < d^l g[M0] (else >)
  SignClass class_l0 = SignClass::mixed;
  SignClass class_l1 = SignClass::mixed;
  SignClass class_k0 = SignClass::mixed;
  SignClass class_k1 = SignClass::mixed;
  std::vector<Point> points;

  std::size_t count(Verdict v) const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [v](const Point& p) { return p.verdict == v; }));
  }
};

namespace detail {

inline bool one_signed(SignClass c) { return c != SignClass::mixed; }

// True when both classes are compatible with one common sign.
inline bool same_sign(SignClass x, SignClass y) {
  if (x == SignClass::mixed || y == SignClass::mixed) return false;
  if (x == SignClass::zero || y == SignClass::zero) return true;
  return x == y;
}

inline bool opposite_sign(SignClass x, SignClass y) {
  if (x == SignClass::mixed || y == SignClass::mixed) return false;
  if (x == SignClass::zero || y == SignClass::zero) return true;
  return x != y;
}

inline std::vector<double> sample_grid(const GreenFunction& g, int l, const Grid& grid, unsigned threads) {
  const int n = g.order();
  std::vector<std::vector<double>> cols(grid.s.size());
  parallel_for(grid.s.size(), threads, [&](std::size_t j) {
    const double s = grid.s[j];
    for (double t : grid.t) {
      if (t == s && l >= n - 1) continue;
      cols[j].push_back(g.eval(t, s, l));
    }
  });
  std::vector<double> out;
  for (auto& c : cols) out.insert(out.end(), c.begin(), c.end());
  return out;
}

}  // namespace detail

/// Classifies interior grid points as case-1 (both d^l vanish for t in [a,s)),
/// case-2 (both vanish for t in (s,b]) or case-3 (strict ordering in the
/// direction the sign hypotheses predict). Requires M0 < M1.
inline ComparisonReport compare_kernels(const GreenFunction& g0, const GreenFunction& g1, int l, const Grid& grid,
                                        const ComparisonOptions& opt = {}) {
  detail::require_family(g0, g1);
  const int n = g0.order();
  const int k = g0.spec().k;
  if (l < 0 || l > n - 1) throw UnsupportedOrderError("compare_kernels needs 0 <= l <= n-1");
  if (!(g0.M() < g1.M())) throw SpecError("compare_kernels requires M0 < M1");

  ComparisonReport rep;
  rep.class_l0 = classify_sign(detail::sample_grid(g0, l, grid, opt.threads), opt.sign_tol);
  rep.class_l1 = classify_sign(detail::sample_grid(g1, l, grid, opt.threads), opt.sign_tol);
  rep.class_k0 = classify_sign(detail::sample_grid(g0, k, grid, opt.threads), opt.sign_tol);
  rep.class_k1 = classify_sign(detail::sample_grid(g1, k, grid, opt.threads), opt.sign_tol);
  if (detail::same_sign(rep.class_l0, rep.class_k1)) {
    rep.hypothesis = Hypothesis::same_sign_i;
  } else if (detail::same_sign(rep.class_l1, rep.class_k0)) {
    rep.hypothesis = Hypothesis::same_sign_ii;
  } else if (detail::opposite_sign(rep.class_l0, rep.class_k1)) {
    rep.hypothesis = Hypothesis::opposite_sign_i;
  } else if (detail::opposite_sign(rep.class_l1, rep.class_k0)) {
    rep.hypothesis = Hypothesis::opposite_sign_ii;
  }
  rep.decreasing = rep.hypothesis == Hypothesis::same_sign_i || rep.hypothesis == Hypothesis::same_sign_ii;
  if (rep.hypothesis == Hypothesis::violated) return rep;

  const auto& spec = g0.spec();
  // Whether d^l g vanishes identically on the half of [a,b] on one side of s.
  auto half_vanishes = [&](const GreenFunction& g, double s, bool left) {
    std::vector<double> ts;
    for (double t : grid.t)
      if (left ? t < s : t > s) ts.push_back(t);
    const double lo = left ? spec.a : s;
    const double hi = left ? s : spec.b;
    for (int i = 0; i < opt.half_samples; ++i) ts.push_back(lo + (hi - lo) * (i + 0.5) / opt.half_samples);
    double worst = 0.0;
    for (double v : g.eval_column(ts, s, l)) worst = std::max(worst, std::abs(v));
    return worst < opt.vanish_tol;
  };

  struct Job {
    double t, s;
  };
  std::vector<Job> jobs;
  for (double s : grid.s) {
    if (s <= spec.a || s >= spec.b) continue;
    for (double t : grid.t) {
      if (t <= spec.a || t >= spec.b || t == s) continue;
      jobs.push_back({t, s});
    }
  }
  rep.points.resize(jobs.size());
  std::map<std::pair<double, bool>, bool> vanish;  // (s, left) -> both kernels vanish
  for (const auto& j : jobs) {
    const bool left = j.t < j.s;
    auto key = std::pair{j.s, left};
    if (!vanish.count(key)) vanish[key] = half_vanishes(g0, j.s, left) && half_vanishes(g1, j.s, left);
  }
  parallel_for(jobs.size(), opt.threads, [&](std::size_t i) {
    const auto [t, s] = jobs[i];
    const bool left = t < s;
    ComparisonReport::Point p{t, s, Verdict::indeterminate, 0.0};
    const double v0 = g0.eval(t, s, l);
    const double v1 = g1.eval(t, s, l);
    p.margin = rep.decreasing ? v0 - v1 : v1 - v0;
    if (vanish.at({s, left})) {
      p.verdict = left ? Verdict::case1 : Verdict::case2;
    } else if (p.margin > opt.strict_margin) {
      p.verdict = Verdict::case3;
    } else if (p.margin < -opt.strict_margin) {
      p.verdict = Verdict::violation;
    }
    rep.points[i] = p;
  });
  return rep;
}

/// When d^k g[MA] >= 0 >= d^k g[MB] on the grid (strictly somewhere), the
/// parameters must satisfy MB < MA. `applicable` is false if the sign
/// pattern is absent in both role assignments.
struct OrderCheck {
  bool applicable = false;
  bool consistent = true;
};

inline OrderCheck parameter_order_check(const GreenFunction& g0, const GreenFunction& g1, const Grid& grid,
                                        double tol = 1e-9) {
  detail::require_family(g0, g1);
  const int k = g0.spec().k;
  const auto v0 = detail::sample_grid(g0, k, grid, 1);
  const auto v1 = detail::sample_grid(g1, k, grid, 1);
  auto pattern = [tol](const std::vector<double>& pos, const std::vector<double>& neg) {
    const auto [plo, phi] = std::minmax_element(pos.begin(), pos.end());
    const auto [nlo, nhi] = std::minmax_element(neg.begin(), neg.end());
    return *plo >= -tol && *nhi <= tol && (*phi > tol || *nlo < -tol);
  };
  OrderCheck out;
  if (pattern(v0, v1)) {
    out.applicable = true;
    out.consistent = g1.M() < g0.M();
  } else if (pattern(v1, v0)) {
    out.applicable = true;
    out.consistent = g0.M() < g1.M();
  }
  return out;
}

}  // namespace greenlink
