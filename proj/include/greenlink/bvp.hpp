#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenlink/coefficient.hpp"
#include "greenlink/errors.hpp"

namespace greenlink {

/// Linear two-point problem
///
///   u^(n) + a_1(t) u^(n-1) + ... + a_n(t) u + M u^(k) = sigma(t),  t in [a,b],
///   B_i(u) = sum_j alpha(i,j) u^(j)(a) + beta(i,j) u^(j)(b) = 0,   i = 1..n.
struct BvpSpec {
  int order = 2;
  double a = 0.0;
  double b = 1.0;
  std::vector<CoefficientFn> coefficients;  // a_1..a_n
  int k = 0;
  double M = 0.0;
  Eigen::MatrixXd alpha;  // alpha(i, j) multiplies u^(j)(a) in B_i
  Eigen::MatrixXd beta;   // beta(i, j) multiplies u^(j)(b) in B_i

  void validate() const {
    if (order < 1) throw SpecError("order must be at least 1");
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
      throw SpecError("interval must satisfy a < b with finite endpoints");
    if (k < 0 || k >= order) throw SpecError("shift order k must lie in 0..n-1");
    if (!std::isfinite(M)) throw SpecError("parameter M must be finite");
    if (static_cast<int>(coefficients.size()) != order)
      throw SpecError("expected " + std::to_string(order) + " coefficient functions");
    if (alpha.rows() != order || alpha.cols() != order || beta.rows() != order || beta.cols() != order)
      throw SpecError("boundary matrices must be n x n");
    for (int i = 0; i < order; ++i) {
      if (alpha.row(i).isZero(0.0) && beta.row(i).isZero(0.0))
        throw SpecError("boundary functional " + std::to_string(i + 1) + " is identically zero");
    }
  }

  bool contains(double t) const { return t >= a && t <= b; }

  /// Coefficient of u^(n-j) after folding M into the u^(k) slot (j = n-k).
  CoefficientFn effective_coefficient(int j) const {
    const auto& c = coefficients.at(static_cast<std::size_t>(j - 1));
    return j == order - k ? c + CoefficientFn::constant(M) : c;
  }

  std::vector<CoefficientFn> effective_coefficients() const {
    std::vector<CoefficientFn> out;
    out.reserve(static_cast<std::size_t>(order));
    for (int j = 1; j <= order; ++j) out.push_back(effective_coefficient(j));
    return out;
  }
};

inline BvpSpec with_parameter(BvpSpec spec, double M) {
  spec.M = M;
  return spec;
}

/// Same n, interval, coefficients, k and boundary conditions; M may differ.
inline bool same_family(const BvpSpec& x, const BvpSpec& y) {
  if (x.order != y.order || x.a != y.a || x.b != y.b || x.k != y.k) return false;
  if (x.alpha != y.alpha || x.beta != y.beta) return false;
  for (std::size_t j = 0; j < x.coefficients.size(); ++j)
    if (x.coefficients[j].to_string() != y.coefficients[j].to_string()) return false;
  return true;
}

/// T_{n,k}[M] u at t, given derivs[j] = u^(j)(t) for j = 0..n.
inline double apply_operator(const BvpSpec& spec, std::span<const double> derivs, double t) {
  const int n = spec.order;
  if (static_cast<int>(derivs.size()) != n + 1) throw SpecError("apply_operator needs n+1 derivatives");
  if (!spec.contains(t)) throw SpecError("t outside [a,b]");
  double v = derivs[static_cast<std::size_t>(n)];
  for (int j = 1; j <= n; ++j)
    v += spec.coefficients[static_cast<std::size_t>(j - 1)](t) * derivs[static_cast<std::size_t>(n - j)];
  return v + spec.M * derivs[static_cast<std::size_t>(spec.k)];
}

/// B_i(u) from the derivative stacks u^(0..n-1) at a and at b.
inline double boundary_functional(const BvpSpec& spec, int i, std::span<const double> at_a,
                                  std::span<const double> at_b) {
  double v = 0.0;
  for (int j = 0; j < spec.order; ++j)
    v += spec.alpha(i, j) * at_a[static_cast<std::size_t>(j)] + spec.beta(i, j) * at_b[static_cast<std::size_t>(j)];
  return v;
}

}  // namespace greenlink
