#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "greenlink/bvp.hpp"
#include "greenlink/coefficient.hpp"
#include "greenlink/errors.hpp"
#include "greenlink/fundamental.hpp"
#include "greenlink/quadrature.hpp"

namespace greenlink {

/// Which lateral limit to take on the diagonal t = s.
enum class Side { none, left, right };

inline constexpr double kSingularityThreshold = 1e-10;
inline constexpr double kVanishThreshold = 1e-10;

struct SolvabilityCertificate {
  Eigen::MatrixXd matrix;  // [B_i(y_j)]
  double determinant = 0.0;
  double threshold = 0.0;
  double condition = std::numeric_limits<double>::infinity();
  bool unique_solvable = false;
};

/// Characteristic matrix alpha + beta * Y(b) and its determinant test.
inline SolvabilityCertificate check_solvability(const BvpSpec& spec, const FundamentalSystem& fs) {
  SolvabilityCertificate cert;
  cert.matrix = spec.alpha + spec.beta * fs.stack(spec.b);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(cert.matrix);
  cert.determinant = lu.determinant();
  const double scale = cert.matrix.cwiseAbs().rowwise().sum().maxCoeff();
  cert.threshold = kSingularityThreshold * scale;
  cert.unique_solvable = std::isfinite(cert.determinant) && std::abs(cert.determinant) > cert.threshold;
  if (cert.unique_solvable) {
    const double rc = lu.rcond();
    cert.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  }
  return cert;
}

inline SolvabilityCertificate check_solvability(const BvpSpec& spec, double tol = kDefaultTolerance) {
  return check_solvability(spec, FundamentalSystem(spec, tol));
}

/// Green's function g(t,s) of a uniquely solvable problem.
///
/// For each s the kernel is sum_j c_j(s) y_j(t) for t < s and
/// sum_j d_j(s) y_j(t) for t > s. The 2n coefficients solve n-1 continuity
/// conditions, the unit jump of the (n-1)-th derivative, and the n boundary
/// conditions. Solved coefficients are cached per s; the cache is guarded so
/// concurrent evaluation is safe.
class GreenFunction {
 public:
  struct Coefficients {
    Eigen::VectorXd left;   // c(s), branch t < s
    Eigen::VectorXd right;  // d(s), branch t > s
  };

  explicit GreenFunction(BvpSpec spec, double tol = kDefaultTolerance)
      : spec_(std::move(spec)),
        fs_(std::make_shared<const FundamentalSystem>(spec_, tol)),
        cert_(check_solvability(spec_, *fs_)),
        cache_(std::make_unique<Cache>()) {
    if (!cert_.unique_solvable)
      throw SingularProblemError("problem is not uniquely solvable: M = " + std::to_string(spec_.M) +
                                     " is an eigenvalue (characteristic determinant " +
                                     std::to_string(cert_.determinant) + ")",
                                 cert_.determinant);
    yb_ = fs_->stack(spec_.b);
  }

  const BvpSpec& spec() const { return spec_; }
  const FundamentalSystem& fundamental() const { return *fs_; }
  const SolvabilityCertificate& certificate() const { return cert_; }
  int order() const { return spec_.order; }
  double M() const { return spec_.M; }

  Coefficients coefficients(double s) const {
    {
      std::shared_lock lock(cache_->mutex);
      auto it = cache_->entries.find(s);
      if (it != cache_->entries.end()) return it->second;
    }
    Coefficients solved = solve(s);
    std::unique_lock lock(cache_->mutex);
    if (cache_->entries.size() > kCacheLimit) cache_->entries.clear();
    cache_->entries.try_emplace(s, solved);
    return solved;
  }

  /// d^l/dt^l g(t,s) for 0 <= l <= n. On the diagonal, orders >= n-1 need a side.
  double eval(double t, double s, int l, Side side = Side::none) const {
    if (l < 0 || l > spec_.order)
      throw UnsupportedOrderError("derivative order " + std::to_string(l) + " outside 0..n");
    return derivatives(t, s, l, side)(l);
  }

  /// t-derivatives of orders 0..max_order at (t,s). Orders >= n come from
  /// differentiating the ODE, so any order is available off the diagonal.
  Eigen::VectorXd derivatives(double t, double s, int max_order, Side side = Side::none) const {
    check_point(t, s);
    const Eigen::VectorXd coef = branch(t, s, max_order, side);
    const Eigen::MatrixXd stack = fs_->stack(t);
    return fs_->extend(stack * coef, t, max_order).col(0);
  }

  /// d^l g(t, s_i) for fixed t and many s (stack at t is computed once).
  std::vector<double> eval_row(double t, std::span<const double> s_values, int l, Side side = Side::none) const {
    if (l < 0 || l > spec_.order) throw UnsupportedOrderError("derivative order outside 0..n");
    const Eigen::MatrixXd ext = fs_->extended_stack(t, l);
    std::vector<double> out;
    out.reserve(s_values.size());
    for (double s : s_values) {
      check_point(t, s);
      out.push_back(ext.row(l).dot(branch(t, s, l, side)));
    }
    return out;
  }

  /// d^l g(t_i, s) for fixed s and many t.
  std::vector<double> eval_column(std::span<const double> t_values, double s, int l, Side side = Side::none) const {
    if (l < 0 || l > spec_.order) throw UnsupportedOrderError("derivative order outside 0..n");
    std::vector<double> out;
    out.reserve(t_values.size());
    for (double t : t_values) {
      check_point(t, s);
      const Eigen::VectorXd coef = branch(t, s, l, side);
      out.push_back(fs_->extend(fs_->stack(t) * coef, t, l)(l, 0));
    }
    return out;
  }

  /// d^l g(t_i, s_j) stored at [j * t.size() + i]. Each t costs one stack
  /// evaluation and each s one coefficient solve. Diagonal points of order
  /// >= n-1 are NaN.
  std::vector<double> eval_grid(std::span<const double> t_values, std::span<const double> s_values, int l) const {
    if (l < 0 || l > spec_.order) throw UnsupportedOrderError("derivative order outside 0..n");
    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(t_values.size());
    for (double t : t_values) {
      check_point(t, spec_.a);
      rows.push_back(fs_->extended_stack(t, l).row(l));
    }
    std::vector<double> out(t_values.size() * s_values.size());
    for (std::size_t j = 0; j < s_values.size(); ++j) {
      const double s = s_values[j];
      check_point(spec_.a, s);
      const auto c = coefficients(s);
      for (std::size_t i = 0; i < t_values.size(); ++i) {
        const double t = t_values[i];
        double v;
        if (t < s || (t == s && l <= spec_.order - 2))
          v = rows[i].dot(c.left);
        else if (t > s)
          v = rows[i].dot(c.right);
        else
          v = std::numeric_limits<double>::quiet_NaN();
        out[j * t_values.size() + i] = v;
      }
    }
    return out;
  }

  /// max_i |B_i(g(., s))|.
  double boundary_residual(double s) const {
    const int n = spec_.order;
    Eigen::VectorXd at_a = derivatives(spec_.a, s, n - 1, Side::left);
    Eigen::VectorXd at_b = derivatives(spec_.b, s, n - 1, Side::right);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(boundary_functional(spec_, i, std::span<const double>(at_a.data(), n),
                                                           std::span<const double>(at_b.data(), n))));
    return worst;
  }

  /// Jump of d^{n-1} g across t = s, from symmetric samples at distance eps
  /// and eps/2 combined by one Richardson step.
  double measured_jump(double s, double eps = 1e-4) const {
    const int m = spec_.order - 1;
    auto jump = [&](double h) { return eval(s + h, s, m) - eval(s - h, s, m); };
    return 2.0 * jump(0.5 * eps) - jump(eps);
  }

  /// T_{n,k}[M] applied to g(., s) at t != s.
  double ode_residual(double t, double s) const {
    if (t == s) throw SpecError("ODE residual is only defined off the diagonal");
    const Eigen::VectorXd d = derivatives(t, s, spec_.order);
    return apply_operator(spec_, std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), t);
  }

 private:
  static constexpr std::size_t kCacheLimit = 1u << 20;

  struct Cache {
    std::shared_mutex mutex;
    std::unordered_map<double, Coefficients> entries;
  };

  void check_point(double t, double s) const {
    if (!spec_.contains(t) || !spec_.contains(s)) throw SpecError("(t,s) outside [a,b]^2");
  }

  Eigen::VectorXd branch(double t, double s, int max_order, Side side) const {
    auto c = coefficients(s);
    if (t < s) return c.left;
    if (t > s) return c.right;
    if (max_order <= spec_.order - 2) return c.left;
    if (side == Side::none)
      throw SpecError("diagonal evaluation of order >= n-1 requires an explicit side");
    return side == Side::left ? c.left : c.right;
  }

  Coefficients solve(double s) const {
    const int n = spec_.order;
    if (!spec_.contains(s)) throw SpecError("s outside [a,b]");
    const Eigen::MatrixXd ys = fs_->stack(s);
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    // continuity of orders 0..n-2 and unit jump of order n-1
    sys.block(0, 0, n, n) = -ys;
    sys.block(0, n, n, n) = ys;
    rhs(n - 1) = 1.0;
    // boundary functionals: left branch at a (Y(a) = I), right branch at b
    sys.block(n, 0, n, n) = spec_.alpha;
    sys.block(n, n, n, n) = spec_.beta * yb_;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    const Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite() || lu.rcond() < 1e3 * std::numeric_limits<double>::epsilon())
      throw SingularProblemError("Green's function system is singular at s = " + std::to_string(s) +
                                     " despite certificate determinant " + std::to_string(cert_.determinant),
                                 cert_.determinant);
    return {x.head(n), x.tail(n)};
  }

  BvpSpec spec_;
  std::shared_ptr<const FundamentalSystem> fs_;
  SolvabilityCertificate cert_;
  Eigen::MatrixXd yb_;
  std::unique_ptr<Cache> cache_;
};

/// u(t) = int_a^b d^l/dt^l g(t,s) sigma(s) ds, l <= n-1 (l = 0 gives the solution).
inline double solve_bvp(const GreenFunction& g, const CoefficientFn& sigma, const QuadratureRule& quad, double t,
                        int l = 0) {
  if (l < 0 || l > g.order() - 1) throw UnsupportedOrderError("solve_bvp supports derivative orders 0..n-1");
  const auto& spec = g.spec();
  const auto nodes = quad.nodes(spec.a, spec.b, {t});
  std::vector<double> xs;
  xs.reserve(nodes.size());
  for (const auto& nd : nodes) xs.push_back(nd.x);
  const auto row = g.eval_row(t, xs, l);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += nodes[i].w * row[i] * sigma(nodes[i].x);
  return acc;
}

}  // namespace greenlink
