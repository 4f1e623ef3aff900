#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "greenlink/bvp.hpp"

namespace greenlink::oracles {

/// u'' + M u^(k) with u(0) = u'(1) = 0 on [0,1].
inline BvpSpec mixed_problem(double M, int k = 0) {
  BvpSpec spec;
  spec.order = 2;
  spec.a = 0.0;
  spec.b = 1.0;
  spec.coefficients = {CoefficientFn(), CoefficientFn()};
  spec.k = k;
  spec.M = M;
  spec.alpha = Eigen::MatrixXd{{1.0, 0.0}, {0.0, 0.0}};
  spec.beta = Eigen::MatrixXd{{0.0, 0.0}, {0.0, 1.0}};
  return spec;
}

/// u'' + M u with u(0) = u(1) = 0 on [0,1].
inline BvpSpec dirichlet_problem(double M) {
  BvpSpec spec = mixed_problem(M, 0);
  spec.beta = Eigen::MatrixXd{{0.0, 0.0}, {1.0, 0.0}};
  return spec;
}

namespace detail {

// expm1(x)/x, continuous through x = 0.
inline double relative_expm1(double x) {
  if (std::abs(x) < 1e-6) return 1.0 + x / 2.0 + x * x / 6.0;
  return std::expm1(x) / x;
}

}  // namespace detail

/// Closed-form kernel of u'' + M u' = sigma, u(0) = u'(1) = 0.
/// l = 0 gives g, l = 1 its t-derivative. The diagonal belongs to s <= t.
inline double mixed_k1_kernel(double M, double t, double s, int l = 0) {
  if (l == 1) return s <= t ? 0.0 : -std::exp(M * (s - t));
  if (l != 0) throw std::out_of_range("mixed_k1_kernel supports l in {0,1}");
  // (1 - e^{Ms})/M = -s * expm1(Ms)/(Ms);  e^{Ms}(e^{-Mt} - 1)/M = -t e^{Ms} expm1(-Mt)/(-Mt)
  if (s <= t) return -s * detail::relative_expm1(M * s);
  return -t * std::exp(M * s) * detail::relative_expm1(-M * t);
}

/// Closed-form kernel of u'' + M u = sigma, u(0) = u'(1) = 0, from the pair
/// u1(0) = 0, u2'(1) = 0 with the unit jump normalisation. l in {0,1,2}.
inline double mixed_k0_kernel(double M, double t, double s, int l = 0) {
  if (l < 0 || l > 2) throw std::out_of_range("mixed_k0_kernel supports l in {0,1,2}");
  if (l == 2) return -M * mixed_k0_kernel(M, t, s, 0);
  const bool below = t <= s;
  const double x = below ? t : s;  // argument of u1
  const double y = below ? s : t;  // argument of u2
  if (M == 0.0) {
    // u1 = t, u2 = 1, W = -1
    if (l == 0) return -x;
    return below ? -1.0 : 0.0;
  }
  if (M > 0.0) {
    const double w = std::sqrt(M);
    const double c = std::cos(w);
    if (std::abs(c) < 1e-12) throw std::domain_error("M is an eigenvalue of the mixed problem");
    const double wr = -w * c;
    if (l == 0) return std::sin(w * x) * std::cos(w * (1.0 - y)) / wr;
    if (below) return w * std::cos(w * t) * std::cos(w * (1.0 - s)) / wr;
    return std::sin(w * s) * w * std::sin(w * (1.0 - t)) / wr;
  }
  const double w = std::sqrt(-M);
  // ratios of hyperbolic functions written with decaying exponentials
  auto sinh_over_cosh = [w](double p, double q) {  // sinh(w p) cosh(w q) / cosh(w)
    return 0.5 * (std::exp(w * (p + q - 1.0)) - std::exp(w * (q - p - 1.0))) * 0.5 *
           (1.0 + std::exp(-2.0 * w * q)) / (0.5 * (1.0 + std::exp(-2.0 * w)));
  };
  auto cosh_over_cosh = [w](double p, double q) {  // cosh(w p) cosh(w q) / cosh(w)
    return 0.5 * (std::exp(w * (p + q - 1.0)) + std::exp(w * (q - p - 1.0))) * 0.5 *
           (1.0 + std::exp(-2.0 * w * q)) / (0.5 * (1.0 + std::exp(-2.0 * w)));
  };
  auto sinh_sinh_over_cosh = [w](double p, double q) {  // sinh(w p) sinh(w q) / cosh(w)
    return 0.5 * (std::exp(w * (p + q - 1.0)) - std::exp(w * (q - p - 1.0))) * 0.5 *
           (1.0 - std::exp(-2.0 * w * q)) / (0.5 * (1.0 + std::exp(-2.0 * w)));
  };
  // g = -sinh(w x) cosh(w (1 - y)) / (w cosh w)
  if (l == 0) return -sinh_over_cosh(x, 1.0 - y) / w;
  if (below) return -cosh_over_cosh(t, 1.0 - s);
  return sinh_sinh_over_cosh(s, 1.0 - t);
}

/// Closed-form kernel of u'' + M u = sigma, u(0) = u(1) = 0. l in {0,1,2}.
inline double dirichlet_k0_kernel(double M, double t, double s, int l = 0) {
  if (l < 0 || l > 2) throw std::out_of_range("dirichlet_k0_kernel supports l in {0,1,2}");
  if (l == 2) return -M * dirichlet_k0_kernel(M, t, s, 0);
  const bool below = t <= s;
  const double x = below ? t : s;
  const double y = below ? s : t;
  if (M == 0.0) {
    if (l == 0) return -x * (1.0 - y);
    return below ? -(1.0 - s) : s;
  }
  if (M > 0.0) {
    const double w = std::sqrt(M);
    const double sw = std::sin(w);
    if (std::abs(sw) < 1e-12) throw std::domain_error("M is an eigenvalue of the Dirichlet problem");
    const double wr = -w * sw;
    if (l == 0) return std::sin(w * x) * std::sin(w * (1.0 - y)) / wr;
    if (below) return w * std::cos(w * t) * std::sin(w * (1.0 - s)) / wr;
    return -std::sin(w * s) * w * std::cos(w * (1.0 - t)) / wr;
  }
  const double w = std::sqrt(-M);
  const double wr = -w * std::sinh(w);
  if (l == 0) return std::sinh(w * x) * std::sinh(w * (1.0 - y)) / wr;
  if (below) return w * std::cosh(w * t) * std::sinh(w * (1.0 - s)) / wr;
  return -std::sinh(w * s) * w * std::cosh(w * (1.0 - t)) / wr;
}

/// Singular parameter values of the mixed k = 0 problem: (pi/2 + j pi)^2.
inline double mixed_k0_eigenvalue(int j) {
  const double w = std::numbers::pi / 2.0 + j * std::numbers::pi;
  return w * w;
}

/// A closed-form reference kernel bound to one parameter value.
class ClosedFormKernel {
 public:
  enum class Problem { mixed_k0, mixed_k1, dirichlet_k0 };

  ClosedFormKernel(Problem problem, double M) : problem_(problem), M_(M) {}

  Problem problem() const { return problem_; }
  double M() const { return M_; }

  double operator()(double t, double s, int l = 0) const {
    switch (problem_) {
      case Problem::mixed_k0:
        return mixed_k0_kernel(M_, t, s, l);
      case Problem::mixed_k1:
        return mixed_k1_kernel(M_, t, s, l);
      case Problem::dirichlet_k0:
        return dirichlet_k0_kernel(M_, t, s, l);
    }
    return 0.0;
  }

  BvpSpec spec() const {
    switch (problem_) {
      case Problem::mixed_k0:
        return mixed_problem(M_, 0);
      case Problem::mixed_k1:
        return mixed_problem(M_, 1);
      case Problem::dirichlet_k0:
        return dirichlet_problem(M_);
    }
    return mixed_problem(M_, 0);
  }

  std::string validity() const {
    switch (problem_) {
      case Problem::mixed_k0:
        return "M != (pi/2 + j pi)^2";
      case Problem::mixed_k1:
        return "all real M";
      case Problem::dirichlet_k0:
        return "M != (j pi)^2, j >= 1";
    }
    return {};
  }

 private:
  Problem problem_;
  double M_;
};

}  // namespace greenlink::oracles
