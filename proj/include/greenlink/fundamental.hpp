#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "greenlink/bvp.hpp"
#include "greenlink/errors.hpp"

namespace greenlink {

inline constexpr double kDefaultTolerance = 1e-12;

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr std::array<std::array<double, 6>, 7> a{{
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  }};
  static constexpr std::array<double, 7> b{35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
  // b - b_hat (fifth minus fourth order weights)
  static constexpr std::array<double, 7> e{71.0 / 57600,  0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                           22.0 / 525, -1.0 / 40};
};

}  // namespace detail

/// Fundamental matrix of T_{n,k}[M] y = 0 normalised by y_i^(j)(a) = delta_ij.
///
/// The n x n state holds derivative orders in rows and solutions in columns.
/// Accepted steps are stored; values between them are produced by a single
/// Runge-Kutta step from the nearest accepted node to the requested t, which
/// keeps the dense output at the integrator's own local accuracy.
/// Evaluation is const and safe from several threads.
class FundamentalSystem {
 public:
  FundamentalSystem(const BvpSpec& spec, double tol = kDefaultTolerance)
      : n_(spec.order), a_(spec.a), b_(spec.b), tol_(tol), coefficients_(spec.effective_coefficients()) {
    spec.validate();
    if (!(tol > 0.0)) throw SpecError("integration tolerance must be positive");
    integrate();
  }

  int order() const { return n_; }
  double tolerance() const { return tol_; }
  std::size_t steps() const { return nodes_.size() - 1; }
  double a() const { return a_; }
  double b() const { return b_; }

  /// Derivative stack: row m holds y_1^(m)(t)..y_n^(m)(t), m = 0..n-1.
  Eigen::MatrixXd stack(double t) const {
    if (t < a_ || t > b_) throw SpecError("t outside [a,b]");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(nodes_.begin(), it));
    i = i == 0 ? 0 : i - 1;
    if (i == nodes_.size() - 1 || nodes_[i] == t) return to_matrix(states_[i]);
    std::vector<double> y = states_[i];
    std::vector<double> err;
    step(nodes_[i], t - nodes_[i], y, err, false);
    return to_matrix(y);
  }

  /// Stack extended to orders 0..max_order by differentiating the ODE
  /// algebraically with exact coefficient derivatives.
  Eigen::MatrixXd extended_stack(double t, int max_order) const {
    Eigen::MatrixXd base = stack(t);
    return extend(base, t, max_order);
  }

  /// Extends a stack of orders 0..n-1 (any number of columns) to 0..max_order.
  Eigen::MatrixXd extend(const Eigen::MatrixXd& base, double t, int max_order) const {
    const int cols = static_cast<int>(base.cols());
    const int rows = std::max(max_order + 1, n_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    out.topRows(n_) = base.topRows(n_);
    const int extra = max_order - n_;
    if (extra < 0) return out.topRows(max_order + 1);
    std::vector<std::vector<double>> jets;
    jets.reserve(static_cast<std::size_t>(n_));
    for (const auto& c : coefficients_) jets.push_back(c.jet(t, extra));
    for (int p = 0; p <= extra; ++p) {
      for (int col = 0; col < cols; ++col) {
        double v = 0.0;
        double binom = 1.0;
        for (int q = 0; q <= p; ++q) {
          for (int j = 1; j <= n_; ++j)
            v -= binom * jets[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(q)] * out(n_ - j + p - q, col);
          binom = binom * (p - q) / (q + 1);
        }
        out(n_ + p, col) = v;
      }
    }
    return out;
  }

  double wronskian(double t) const { return stack(t).determinant(); }

  const std::vector<double>& nodes() const { return nodes_; }

 private:
  Eigen::MatrixXd to_matrix(const std::vector<double>& y) const {
    Eigen::MatrixXd m(n_, n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) m(r, c) = y[static_cast<std::size_t>(r * n_ + c)];
    return m;
  }

  void rhs(double t, const std::vector<double>& y, std::vector<double>& dy) const {
    const auto n = static_cast<std::size_t>(n_);
    for (std::size_t r = 0; r + 1 < n; ++r)
      for (std::size_t c = 0; c < n; ++c) dy[r * n + c] = y[(r + 1) * n + c];
    for (std::size_t c = 0; c < n; ++c) dy[(n - 1) * n + c] = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double coef = coefficients_[j - 1](t);
      if (coef == 0.0) continue;
      const std::size_t row = n - j;
      for (std::size_t c = 0; c < n; ++c) dy[(n - 1) * n + c] -= coef * y[row * n + c];
    }
  }

  // One DP5 step of size h; y is replaced by the fifth-order solution.
  void step(double t, double h, std::vector<double>& y, std::vector<double>& err, bool want_error) const {
    using DP = detail::DormandPrince;
    const std::size_t size = y.size();
    std::array<std::vector<double>, 7> k;
    std::vector<double> tmp(size);
    for (std::size_t s = 0; s < 7; ++s) {
      if (s == 6 && !want_error) break;
      k[s].assign(size, 0.0);
      for (std::size_t i = 0; i < size; ++i) {
        double acc = y[i];
        for (std::size_t q = 0; q < s; ++q) acc += h * DP::a[s][q] * k[q][i];
        tmp[i] = acc;
      }
      rhs(t + DP::c[s] * h, tmp, k[s]);
    }
    if (want_error) {
      err.assign(size, 0.0);
      for (std::size_t i = 0; i < size; ++i)
        for (std::size_t q = 0; q < 7; ++q) err[i] += h * DP::e[q] * k[q][i];
    }
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t q = 0; q < 6; ++q) y[i] += h * DP::b[q] * k[q][i];
  }

  void integrate() {
    const auto n = static_cast<std::size_t>(n_);
    std::vector<double> y(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i * n + i] = 1.0;
    nodes_.push_back(a_);
    states_.push_back(y);
    const double span = b_ - a_;
    double t = a_;
    double h = span / 64.0;
    const double h_max = span / 8.0;
    std::vector<double> err;
    std::size_t guard = 0;
    while (t < b_) {
      if (++guard > 2'000'000) throw IntegrationError("too many integration steps", t);
      h = std::min(h, b_ - t);
      std::vector<double> trial = y;
      step(t, h, trial, err, true);
      double norm = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double scale = tol_ + tol_ * std::max(std::abs(y[i]), std::abs(trial[i]));
        norm += (err[i] / scale) * (err[i] / scale);
      }
      norm = std::sqrt(norm / static_cast<double>(y.size()));
      if (!std::isfinite(norm)) {
        h *= 0.25;
      } else if (norm <= 1.0) {
        t = (b_ - t <= h) ? b_ : t + h;
        y = std::move(trial);
        nodes_.push_back(t);
        states_.push_back(y);
        const double grow = norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(norm, -0.2));
        h = std::min(h_max, h * std::max(0.2, grow));
      } else {
        h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
      }
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
        throw IntegrationError("integration step underflow", t);
    }
  }

  int n_;
  double a_;
  double b_;
  double tol_;
  std::vector<CoefficientFn> coefficients_;
  std::vector<double> nodes_;
  std::vector<std::vector<double>> states_;
};

}  // namespace greenlink
