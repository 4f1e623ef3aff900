#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace greenlink {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int count) {
    if (count < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    const auto n = static_cast<std::size_t>(count);
    const double nd = static_cast<double>(n);
    nodes.resize(n);
    weights.resize(n);
    // P_n(x) and P_n'(x) by the three-term recurrence.
    auto legendre = [n, nd](double x) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double jd = static_cast<double>(j);
        const double p2 = ((2.0 * jd - 1.0) * x * p1 - (jd - 1.0) * p0) / jd;
        p0 = p1;
        p1 = p2;
      }
      return std::pair{p1, nd * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
      for (int iter = 0; iter < 100; ++iter) {
        const auto [p, dp] = legendre(x);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double dp = legendre(x).second;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
  }
};

/// Composite Gauss-Legendre rule over [a,b] with mandatory split points.
///
/// Each subinterval between consecutive split points gets `panels` equal
/// panels of `nodes_per_panel` Gauss points. Integrands with kinks at the
/// split points are integrated at the spectral rate of the smooth pieces.
class QuadratureRule {
 public:
  struct Node {
    double x;
    double w;
  };

  explicit QuadratureRule(int panels = 2, int nodes_per_panel = 20)
      : panels_(panels), base_(nodes_per_panel) {
    if (panels < 1) throw std::invalid_argument("panel count must be positive");
  }

  int panels() const { return panels_; }
  int nodes_per_panel() const { return static_cast<int>(base_.nodes.size()); }

  /// Sorted, deduplicated breakpoints: a, b and every split inside (a, b).
  static std::vector<double> breakpoints(double a, double b, std::vector<double> splits) {
    std::vector<double> pts{a, b};
    for (double x : splits)
      if (x > a && x < b) pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  std::vector<Node> nodes(double a, double b, const std::vector<double>& splits = {}) const {
    auto pts = breakpoints(a, b, splits);
    std::vector<Node> out;
    out.reserve((pts.size() - 1) * static_cast<std::size_t>(panels_) * base_.nodes.size());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double h = (pts[i + 1] - pts[i]) / panels_;
      for (int p = 0; p < panels_; ++p) {
        const double lo = pts[i] + p * h;
        const double mid = lo + 0.5 * h;
        for (std::size_t q = 0; q < base_.nodes.size(); ++q)
          out.push_back({mid + 0.5 * h * base_.nodes[q], 0.5 * h * base_.weights[q]});
      }
    }
    return out;
  }

  template <class F>
  double integrate(F&& f, double a, double b, const std::vector<double>& splits = {}) const {
    double acc = 0.0;
    for (const auto& node : nodes(a, b, splits)) acc += node.w * f(node.x);
    return acc;
  }

  QuadratureRule refined() const { return QuadratureRule(2 * panels_, nodes_per_panel()); }

 private:
  int panels_;
  GaussLegendre base_;
};

}  // namespace greenlink
