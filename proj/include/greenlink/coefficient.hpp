#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace greenlink {

/// Closed-form differentiable scalar function of t.
///
/// Values are built from polynomials, scaled exponentials s*exp(r*t), and
/// sums, products and quotients of those. Every derivative is exact: either
/// symbolically (derivative()) or through truncated Taylor arithmetic
/// (taylor(), jet()). Builders fold constants and merge polynomial pieces, so
/// an identically-zero expression built from these families is recognised
/// structurally by is_structurally_zero().
///
/// Instances are immutable and share their expression tree.
class CoefficientFn {
 public:
  struct Poly {
    std::vector<double> coeffs;  // ascending powers, trailing zeros trimmed
  };
  struct Exp {
    double scale;
    double rate;
  };
  struct Sum {
    std::vector<CoefficientFn> terms;
  };
  struct Prod {
    std::vector<CoefficientFn> factors;
  };
  struct Quot {
    std::vector<CoefficientFn> parts;  // {numerator, denominator}
  };
  using Node = std::variant<Poly, Exp, Sum, Prod, Quot>;

  /// The zero function.
  CoefficientFn() : node_(std::make_shared<const Node>(Poly{})) {}

  static CoefficientFn constant(double value) { return polynomial({value}); }

  static CoefficientFn polynomial(std::vector<double> coeffs) {
    while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
    return CoefficientFn(Poly{std::move(coeffs)});
  }

  static CoefficientFn exponential(double scale, double rate) {
    if (scale == 0.0) return CoefficientFn();
    if (rate == 0.0) return constant(scale);
    return CoefficientFn(Exp{scale, rate});
  }

  static CoefficientFn sum(const std::vector<CoefficientFn>& terms) {
    std::vector<CoefficientFn> flat;
    std::vector<double> poly;
    bool have_poly = false;
    auto absorb = [&](const CoefficientFn& f, auto&& self) -> void {
      if (const auto* s = std::get_if<Sum>(f.node_.get())) {
        for (const auto& t : s->terms) self(t, self);
      } else if (const auto* p = std::get_if<Poly>(f.node_.get())) {
        if (poly.size() < p->coeffs.size()) poly.resize(p->coeffs.size(), 0.0);
        for (std::size_t i = 0; i < p->coeffs.size(); ++i) poly[i] += p->coeffs[i];
        have_poly = true;
      } else {
        flat.push_back(f);
      }
    };
    for (const auto& t : terms) absorb(t, absorb);
    if (have_poly) {
      auto merged = polynomial(std::move(poly));
      if (!merged.is_structurally_zero()) flat.push_back(merged);
    }
    if (flat.empty()) return CoefficientFn();
    if (flat.size() == 1) return flat.front();
    return CoefficientFn(Sum{std::move(flat)});
  }

  static CoefficientFn product(const std::vector<CoefficientFn>& factors) {
    std::vector<CoefficientFn> flat;
    std::vector<double> poly{1.0};
    double exp_scale = 1.0;
    double exp_rate = 0.0;
    bool have_exp = false;
    auto absorb = [&](const CoefficientFn& f, auto&& self) -> void {
      if (const auto* pr = std::get_if<Prod>(f.node_.get())) {
        for (const auto& t : pr->factors) self(t, self);
      } else if (const auto* p = std::get_if<Poly>(f.node_.get())) {
        poly = multiply_poly(poly, p->coeffs);
      } else if (const auto* e = std::get_if<Exp>(f.node_.get())) {
        exp_scale *= e->scale;
        exp_rate += e->rate;
        have_exp = true;
      } else {
        flat.push_back(f);
      }
    };
    for (const auto& f : factors) absorb(f, absorb);
    while (!poly.empty() && poly.back() == 0.0) poly.pop_back();
    if (poly.empty() || exp_scale == 0.0) return CoefficientFn();
    if (have_exp && exp_rate == 0.0) {
      for (double& c : poly) c *= exp_scale;
    } else if (have_exp) {
      // Fold the exponential's scale into a constant polynomial factor.
      if (poly.size() == 1) {
        poly[0] *= exp_scale;
        exp_scale = 1.0;
      }
      flat.insert(flat.begin(), exponential(exp_scale, exp_rate));
    }
    const bool unit_poly = poly.size() == 1 && poly[0] == 1.0;
    if (!unit_poly) flat.insert(flat.begin(), polynomial(poly));
    if (flat.empty()) return constant(1.0);
    if (flat.size() == 1) return flat.front();
    return CoefficientFn(Prod{std::move(flat)});
  }

  static CoefficientFn quotient(const CoefficientFn& num, const CoefficientFn& den) {
    if (den.is_structurally_zero()) throw std::domain_error("quotient by the zero function");
    if (num.is_structurally_zero()) return CoefficientFn();
    if (auto c = den.constant_value()) return product({num, constant(1.0 / *c)});
    return CoefficientFn(Quot{{num, den}});
  }

  double operator()(double t) const { return value(*node_, t); }

  /// Taylor coefficients f^(m)(t)/m! for m = 0..order.
  std::vector<double> taylor(double t, int order) const {
    if (order < 0) throw std::invalid_argument("negative derivative order");
    return taylor_of(*node_, t, static_cast<std::size_t>(order) + 1);
  }

  /// Derivatives f^(m)(t) for m = 0..order.
  std::vector<double> jet(double t, int order) const {
    auto c = taylor(t, order);
    double factorial = 1.0;
    for (std::size_t m = 1; m < c.size(); ++m) {
      factorial *= static_cast<double>(m);
      c[m] *= factorial;
    }
    return c;
  }

  double derivative_at(double t, int order) const { return jet(t, order).back(); }

  /// Symbolic first derivative.
  CoefficientFn derivative() const {
    return std::visit(
        [](const auto& n) -> CoefficientFn {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Poly>) {
            std::vector<double> d;
            for (std::size_t i = 1; i < n.coeffs.size(); ++i)
              d.push_back(static_cast<double>(i) * n.coeffs[i]);
            return polynomial(std::move(d));
          } else if constexpr (std::is_same_v<T, Exp>) {
            return exponential(n.scale * n.rate, n.rate);
          } else if constexpr (std::is_same_v<T, Sum>) {
            std::vector<CoefficientFn> d;
            for (const auto& t : n.terms) d.push_back(t.derivative());
            return sum(d);
          } else if constexpr (std::is_same_v<T, Prod>) {
            std::vector<CoefficientFn> terms;
            for (std::size_t i = 0; i < n.factors.size(); ++i) {
              std::vector<CoefficientFn> f = n.factors;
              f[i] = f[i].derivative();
              terms.push_back(product(f));
            }
            return sum(terms);
          } else {
            const auto& num = n.parts[0];
            const auto& den = n.parts[1];
            auto top = sum({product({num.derivative(), den}),
                            product({constant(-1.0), num, den.derivative()})});
            return quotient(top, product({den, den}));
          }
        },
        *node_);
  }

  bool is_structurally_zero() const {
    const auto* p = std::get_if<Poly>(node_.get());
    return p != nullptr && p->coeffs.empty();
  }

  std::optional<double> constant_value() const {
    const auto* p = std::get_if<Poly>(node_.get());
    if (p == nullptr || p->coeffs.size() > 1) return std::nullopt;
    return p->coeffs.empty() ? 0.0 : p->coeffs[0];
  }

  const Node& node() const { return *node_; }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(12);
    print(os, *node_);
    return os.str();
  }

  friend CoefficientFn operator+(const CoefficientFn& x, const CoefficientFn& y) { return sum({x, y}); }
  friend CoefficientFn operator-(const CoefficientFn& x, const CoefficientFn& y) {
    return sum({x, product({constant(-1.0), y})});
  }
  friend CoefficientFn operator*(const CoefficientFn& x, const CoefficientFn& y) { return product({x, y}); }
  friend CoefficientFn operator/(const CoefficientFn& x, const CoefficientFn& y) { return quotient(x, y); }

 private:
  explicit CoefficientFn(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

  static std::vector<double> multiply_poly(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.empty() || q.empty()) return {};
    std::vector<double> r(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
  }

  static double value(const Node& node, double t) {
    return std::visit(
        [t](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Poly>) {
            double v = 0.0;
            for (auto it = n.coeffs.rbegin(); it != n.coeffs.rend(); ++it) v = v * t + *it;
            return v;
          } else if constexpr (std::is_same_v<T, Exp>) {
            return n.scale * std::exp(n.rate * t);
          } else if constexpr (std::is_same_v<T, Sum>) {
            double v = 0.0;
            for (const auto& f : n.terms) v += f(t);
            return v;
          } else if constexpr (std::is_same_v<T, Prod>) {
            double v = 1.0;
            for (const auto& f : n.factors) v *= f(t);
            return v;
          } else {
            return n.parts[0](t) / n.parts[1](t);
          }
        },
        node);
  }

  // Truncated power-series arithmetic around t, `len` coefficients.
  static std::vector<double> taylor_of(const Node& node, double t, std::size_t len) {
    return std::visit(
        [t, len](const auto& n) -> std::vector<double> {
          using T = std::decay_t<decltype(n)>;
          std::vector<double> out(len, 0.0);
          if constexpr (std::is_same_v<T, Poly>) {
            // c_m = sum_{i>=m} p_i C(i,m) t^(i-m), via repeated synthetic division.
            std::vector<double> work = n.coeffs;
            for (std::size_t m = 0; m < len && !work.empty(); ++m) {
              double rem = 0.0;
              std::vector<double> next(work.size() > 1 ? work.size() - 1 : 0, 0.0);
              for (std::size_t i = work.size(); i-- > 0;) {
                rem = rem * t + work[i];
                if (i > 0) next[i - 1] = rem;
              }
              out[m] = rem;
              work = std::move(next);
            }
          } else if constexpr (std::is_same_v<T, Exp>) {
            double c = n.scale * std::exp(n.rate * t);
            for (std::size_t m = 0; m < len; ++m) {
              out[m] = c;
              c *= n.rate / static_cast<double>(m + 1);
            }
          } else if constexpr (std::is_same_v<T, Sum>) {
            for (const auto& f : n.terms) {
              auto c = taylor_of(*f.node_, t, len);
              for (std::size_t m = 0; m < len; ++m) out[m] += c[m];
            }
          } else if constexpr (std::is_same_v<T, Prod>) {
            out[0] = 1.0;
            for (const auto& f : n.factors) {
              auto c = taylor_of(*f.node_, t, len);
              std::vector<double> r(len, 0.0);
              for (std::size_t i = 0; i < len; ++i)
                for (std::size_t j = 0; i + j < len; ++j) r[i + j] += out[i] * c[j];
              out = std::move(r);
            }
          } else {
            auto num = taylor_of(*n.parts[0].node_, t, len);
            auto den = taylor_of(*n.parts[1].node_, t, len);
            for (std::size_t m = 0; m < len; ++m) {
              double acc = num[m];
              for (std::size_t i = 1; i <= m; ++i) acc -= den[i] * out[m - i];
              out[m] = acc / den[0];
            }
          }
          return out;
        },
        node);
  }

  static void print(std::ostream& os, const Node& node) {
    std::visit(
        [&os](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Poly>) {
            if (n.coeffs.empty()) {
              os << "0";
              return;
            }
            bool first = true;
            for (std::size_t i = 0; i < n.coeffs.size(); ++i) {
              double c = n.coeffs[i];
              if (c == 0.0) continue;
              if (!first) os << (c < 0 ? " - " : " + ");
              else if (c < 0) os << "-";
              double mag = std::abs(c);
              if (i == 0 || mag != 1.0) os << mag;
              if (i > 0) os << (mag != 1.0 ? "*t" : "t");
              if (i > 1) os << "^" << i;
              first = false;
            }
          } else if constexpr (std::is_same_v<T, Exp>) {
            if (n.scale != 1.0) os << n.scale << "*";
            os << "exp(" << n.rate << "*t)";
          } else if constexpr (std::is_same_v<T, Sum>) {
            for (std::size_t i = 0; i < n.terms.size(); ++i) {
              if (i) os << " + ";
              print(os, *n.terms[i].node_);
            }
          } else if constexpr (std::is_same_v<T, Prod>) {
            for (std::size_t i = 0; i < n.factors.size(); ++i) {
              if (i) os << " * ";
              os << "(";
              print(os, *n.factors[i].node_);
              os << ")";
            }
          } else {
            os << "(";
            print(os, *n.parts[0].node_);
            os << ") / (";
            print(os, *n.parts[1].node_);
            os << ")";
          }
        },
        node);
  }

  std::shared_ptr<const Node> node_;
};

}  // namespace greenlink
