#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "greenlink/errors.hpp"

namespace greenlink {

/// Tensor grid of (t, s) sample points.
struct Grid {
  std::vector<double> t;
  std::vector<double> s;
  std::string description;

  /// Closed uniform grid with `count` points per axis, endpoints included.
  static Grid uniform(double a, double b, int count) {
    if (count < 2) throw SpecError("uniform grid needs at least two points per axis");
    Grid g;
    for (int i = 0; i < count; ++i) g.t.push_back(a + (b - a) * i / (count - 1));
    g.s = g.t;
    g.description = "uniform " + std::to_string(count) + "x" + std::to_string(count);
    return g;
  }

  /// Interior grid whose t and s nodes never coincide: cell offsets 1/3 and 2/3.
  static Grid off_diagonal(double a, double b, int count) {
    if (count < 1) throw SpecError("off-diagonal grid needs at least one point per axis");
    Grid g;
    const double h = (b - a) / count;
    for (int i = 0; i < count; ++i) {
      g.t.push_back(a + (i + 1.0 / 3.0) * h);
      g.s.push_back(a + (i + 2.0 / 3.0) * h);
    }
    g.description = "off-diagonal " + std::to_string(count) + "x" + std::to_string(count);
    return g;
  }

  /// Uniform grid plus geometrically clustered points next to both endpoints
  /// (distances (b-a)*10^-j, j = 2..decades+1). Sign changes confined to thin
  /// boundary layers show up on this grid long before a uniform one.
  static Grid clustered(double a, double b, int count, int decades = 6) {
    Grid g = uniform(a, b, count);
    for (int j = 2; j <= decades + 1; ++j) {
      const double d = (b - a) * std::pow(10.0, -j);
      g.t.push_back(a + d);
      g.t.push_back(b - d);
    }
    std::sort(g.t.begin(), g.t.end());
    g.t.erase(std::unique(g.t.begin(), g.t.end()), g.t.end());
    g.s = g.t;
    g.description = "clustered " + std::to_string(count) + "+" + std::to_string(2 * decades);
    return g;
  }

  std::size_t size() const { return t.size() * s.size(); }
};

enum class SignClass { zero, nonnegative, nonpositive, mixed };

inline const char* to_string(SignClass c) {
  switch (c) {
    case SignClass::zero:
      return "zero";
    case SignClass::nonnegative:
      return "nonnegative";
    case SignClass::nonpositive:
      return "nonpositive";
    case SignClass::mixed:
      return "mixed";
  }
  return "?";
}

/// Sign class of sampled values; values within `tol` of zero count for both signs.
inline SignClass classify_sign(std::span<const double> values, double tol) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (values.empty()) return SignClass::zero;
  const bool nonneg = lo >= -tol;
  const bool nonpos = hi <= tol;
  if (nonneg && nonpos) return SignClass::zero;
  if (nonneg) return SignClass::nonnegative;
  if (nonpos) return SignClass::nonpositive;
  return SignClass::mixed;
}

}  // namespace greenlink
