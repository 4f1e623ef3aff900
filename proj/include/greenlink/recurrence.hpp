#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenlink/bvp.hpp"
#include "greenlink/coefficient.hpp"
#include "greenlink/errors.hpp"
#include "greenlink/green.hpp"

namespace greenlink {

/// Where M enters the level-0 coefficients.
///   operator_slot: b_{n-k,0} = a_{n-k} + M, the coefficient of u^(k) in T.
///   literal_index: b_{k,0} = a_k + M, i.e. M multiplies u^(n-k); needs k >= 1.
enum class MPlacement { operator_slot, literal_index };

enum class RecurrenceBranch { zero_coefficient, nonzero_coefficient };

inline const char* to_string(RecurrenceBranch b) {
  return b == RecurrenceBranch::zero_coefficient ? "b_n == 0" : "b_n != 0";
}

/// H_l u = u^(n) + b_{1,l} u^(n-1) + ... + b_{n,l} u, which annihilates
/// d^l g off the diagonal.
struct HOperator {
  int order = 0;
  int level = 0;
  MPlacement placement = MPlacement::operator_slot;
  std::vector<CoefficientFn> b;          // b_{1,l}..b_{n,l}
  std::vector<RecurrenceBranch> branches;  // branch used at r = 1..l
  bool collapsed = false;                // b_{j,l} == b_{j,0} for every j
  BvpSpec spec;

  const CoefficientFn& coefficient(int j) const { return b.at(static_cast<std::size_t>(j - 1)); }

  /// H applied at t to u with derivs[j] = u^(j)(t), j = 0..n.
  double apply(std::span<const double> derivs, double t) const {
    if (static_cast<int>(derivs.size()) != order + 1) throw SpecError("H needs n+1 derivatives");
    double v = derivs[static_cast<std::size_t>(order)];
    for (int j = 1; j <= order; ++j) v += coefficient(j)(t) * derivs[static_cast<std::size_t>(order - j)];
    return v;
  }

  std::string to_string() const {
    std::ostringstream os;
    os << "H_" << level << " u = u";
    auto derivative_label = [](int m) {
      if (m == 0) return std::string("u");
      if (m <= 3) return "u" + std::string(static_cast<std::size_t>(m), '\'');
      return "u^(" + std::to_string(m) + ")";
    };
    if (order <= 3)
      os << std::string(static_cast<std::size_t>(order), '\'');
    else
      os << "^(" << order << ")";
    for (int j = 1; j <= order; ++j) {
      const auto& c = coefficient(j);
      if (c.is_structurally_zero()) continue;
      os << " + (" << c.to_string() << ") " << derivative_label(order - j);
    }
    if (!branches.empty()) {
      os << "\n  branches:";
      for (std::size_t r = 0; r < branches.size(); ++r)
        os << " r=" << r + 1 << ": " << greenlink::to_string(branches[r]) << (r + 1 < branches.size() ? "," : "");
    }
    return os.str();
  }
};

namespace detail {

inline constexpr int kRecurrenceSamples = 1024;
inline constexpr double kRecurrenceZero = 1e-12;

enum class ZeroPattern { identically_zero, nowhere_zero, mixed };

// Exact dichotomy on the family when possible, sampling otherwise.
inline ZeroPattern zero_pattern(const CoefficientFn& f, double a, double b) {
  if (f.is_structurally_zero()) return ZeroPattern::identically_zero;
  if (auto c = f.constant_value()) return *c == 0.0 ? ZeroPattern::identically_zero : ZeroPattern::nowhere_zero;
  bool all_small = true;
  bool any_small = false;
  int sign = 0;
  bool sign_change = false;
  for (int i = 0; i < kRecurrenceSamples; ++i) {
    const double t = a + (b - a) * i / (kRecurrenceSamples - 1);
    const double v = f(t);
    if (!std::isfinite(v)) return ZeroPattern::mixed;
    const bool small = std::abs(v) < kRecurrenceZero;
    all_small = all_small && small;
    any_small = any_small || small;
    if (!small) {
      const int sg = v > 0.0 ? 1 : -1;
      if (sign != 0 && sg != sign) sign_change = true;
      sign = sg;
    }
  }
  if (all_small) return ZeroPattern::identically_zero;
  if (any_small || sign_change) return ZeroPattern::mixed;
  return ZeroPattern::nowhere_zero;
}

}  // namespace detail

/// Coefficients b_{j,l} of the operator annihilating d^l g, 0 <= l <= n-1.
inline HOperator build_H(const BvpSpec& spec, int l, MPlacement placement = MPlacement::operator_slot) {
  spec.validate();
  const int n = spec.order;
  if (l < 0 || l > n - 1) throw UnsupportedOrderError("H_l is defined for 0 <= l <= n-1");
  if (n == 1 && l >= 1) throw UnsupportedOrderError("first-order problems only admit l = 0");

  HOperator H;
  H.order = n;
  H.level = l;
  H.placement = placement;
  H.spec = spec;

  // level 0; index 0 holds b_{0,r} == 1
  std::vector<CoefficientFn> cur(static_cast<std::size_t>(n) + 1);
  cur[0] = CoefficientFn::constant(1.0);
  for (int j = 1; j <= n; ++j) cur[static_cast<std::size_t>(j)] = spec.coefficients[static_cast<std::size_t>(j - 1)];
  if (placement == MPlacement::operator_slot) {
    cur[static_cast<std::size_t>(n - spec.k)] = cur[static_cast<std::size_t>(n - spec.k)] + CoefficientFn::constant(spec.M);
  } else {
    if (spec.k == 0) throw SpecError("literal M placement needs k >= 1 (b_{0,0} is fixed to 1)");
    cur[static_cast<std::size_t>(spec.k)] = cur[static_cast<std::size_t>(spec.k)] + CoefficientFn::constant(spec.M);
  }
  const std::vector<CoefficientFn> level0 = cur;

  for (int r = 1; r <= l; ++r) {
    const CoefficientFn bn = cur[static_cast<std::size_t>(n)];
    const auto pattern = detail::zero_pattern(bn, spec.a, spec.b);
    if (pattern == detail::ZeroPattern::mixed)
      throw HypothesisError("level " + std::to_string(r) + ": b_{n," + std::to_string(r - 1) + "} vanishes at isolated points or changes sign on [a,b]",
                            r);
    std::vector<CoefficientFn> next(cur.size());
    next[0] = CoefficientFn::constant(1.0);
    if (pattern == detail::ZeroPattern::identically_zero) {
      for (int j = 1; j <= n; ++j)
        next[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j)] + cur[static_cast<std::size_t>(j - 1)].derivative();
      H.branches.push_back(RecurrenceBranch::zero_coefficient);
    } else {
      const auto shift = (cur[static_cast<std::size_t>(n - 1)] / bn).derivative() + CoefficientFn::constant(1.0);
      if (detail::zero_pattern(shift, spec.a, spec.b) == detail::ZeroPattern::mixed)
        throw HypothesisError("level " + std::to_string(r) + ": (b_{n-1," + std::to_string(r - 1) + "}/b_{n," + std::to_string(r - 1) +
                                  "})' equals -1 only at some points of [a,b]",
                              r);
      for (int j = 1; j <= n; ++j)
        next[static_cast<std::size_t>(j)] =
            cur[static_cast<std::size_t>(j)] + bn * (cur[static_cast<std::size_t>(j - 1)] / bn).derivative();
      H.branches.push_back(RecurrenceBranch::nonzero_coefficient);
    }
    cur = std::move(next);
  }

  H.b.assign(cur.begin() + 1, cur.end());
  H.collapsed = true;
  for (int j = 1; j <= n; ++j)
    if (cur[static_cast<std::size_t>(j)].to_string() != level0[static_cast<std::size_t>(j)].to_string()) H.collapsed = false;
  return H;
}

/// H_l applied to d^l g(., s) at t != s.
inline double H_residual(const HOperator& H, const GreenFunction& g, int l, double t, double s) {
  if (l != H.level) throw SpecError("operator level does not match the derivative order");
  if (H.order != g.order()) throw SpecError("operator and kernel orders differ");
  if (t == s) throw SpecError("H residual is only defined off the diagonal");
  if (!same_family(H.spec, g.spec()) || H.spec.M != g.M()) throw SpecError("operator was built for another problem");
  const int n = H.order;
  const Eigen::VectorXd d = g.derivatives(t, s, n + l);
  const std::span<const double> shifted(d.data() + l, static_cast<std::size_t>(n) + 1);
  // a collapsed recurrence is T itself; reuse its evaluation
  if (H.collapsed && H.placement == MPlacement::operator_slot) return apply_operator(g.spec(), shifted, t);
  return H.apply(shifted, t);
}

}  // namespace greenlink
