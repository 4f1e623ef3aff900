#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "greenlink/bvp.hpp"
#include "greenlink/coefficient.hpp"
#include "greenlink/errors.hpp"
#include "greenlink/grid.hpp"
#include "greenlink/quadrature.hpp"

namespace greenlink::io {

using json = nlohmann::json;

/// Malformed configuration: bad JSON, unknown or missing keys, wrong types.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal string that reads back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double x, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + std::string(key) + "\"");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<int> integers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Eigen::MatrixXd matrix(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    const auto row = numbers(j[static_cast<std::size_t>(r)], where + "[" + std::to_string(r) + "]");
    if (static_cast<int>(row.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " columns");
    for (int c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Coefficient functions

inline CoefficientFn coefficient_from_json(const json& j, const std::string& where = "coefficient") {
  if (j.is_number()) return CoefficientFn::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError(where + ": expected an object or a number");
  const auto& type_node = detail::require(j, "type", where);
  if (!type_node.is_string()) throw ConfigError(where + ".type: expected a string");
  const auto type = type_node.get<std::string>();
  if (type == "const") {
    detail::check_keys(j, {"type", "value"}, where);
    return CoefficientFn::constant(detail::number(detail::require(j, "value", where), where + ".value"));
  }
  if (type == "poly") {
    detail::check_keys(j, {"type", "coeffs"}, where);
    return CoefficientFn::polynomial(detail::numbers(detail::require(j, "coeffs", where), where + ".coeffs"));
  }
  if (type == "exp") {
    detail::check_keys(j, {"type", "scale", "rate"}, where);
    return CoefficientFn::exponential(detail::number(detail::require(j, "scale", where), where + ".scale"),
                                      detail::number(detail::require(j, "rate", where), where + ".rate"));
  }
  if (type == "sum" || type == "prod") {
    const char* key = type == "sum" ? "terms" : "factors";
    detail::check_keys(j, {"type", key}, where);
    const auto& items = detail::require(j, key, where);
    if (!items.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    std::vector<CoefficientFn> parts;
    for (std::size_t i = 0; i < items.size(); ++i)
      parts.push_back(coefficient_from_json(items[i], where + "." + key + "[" + std::to_string(i) + "]"));
    return type == "sum" ? CoefficientFn::sum(parts) : CoefficientFn::product(parts);
  }
  throw ConfigError(where + ": unknown coefficient type \"" + type + "\"");
}

inline json coefficient_to_json(const CoefficientFn& f) {
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CoefficientFn::Poly>) {
          if (n.coeffs.size() <= 1) return {{"type", "const"}, {"value", n.coeffs.empty() ? 0.0 : n.coeffs[0]}};
          return {{"type", "poly"}, {"coeffs", n.coeffs}};
        } else if constexpr (std::is_same_v<T, CoefficientFn::Exp>) {
          return {{"type", "exp"}, {"scale", n.scale}, {"rate", n.rate}};
        } else if constexpr (std::is_same_v<T, CoefficientFn::Sum>) {
          json terms = json::array();
          for (const auto& t : n.terms) terms.push_back(coefficient_to_json(t));
          return {{"type", "sum"}, {"terms", terms}};
        } else if constexpr (std::is_same_v<T, CoefficientFn::Prod>) {
          json factors = json::array();
          for (const auto& t : n.factors) factors.push_back(coefficient_to_json(t));
          return {{"type", "prod"}, {"factors", factors}};
        } else {
          throw ConfigError("quotients have no JSON representation");
        }
      },
      f.node());
}

// ---------------------------------------------------------------------------
// Problem

inline BvpSpec problem_from_json(const json& j, const std::string& where = "problem") {
  detail::check_keys(j, {"order", "interval", "coefficients", "k", "M", "alpha", "beta"}, where);
  BvpSpec spec;
  spec.order = detail::integer(detail::require(j, "order", where), where + ".order");
  if (spec.order < 1 || spec.order > 12) throw ConfigError(where + ".order: expected 1..12");
  const auto iv = detail::numbers(detail::require(j, "interval", where), where + ".interval");
  if (iv.size() != 2) throw ConfigError(where + ".interval: expected [a, b]");
  spec.a = iv[0];
  spec.b = iv[1];
  const auto& coeffs = detail::require(j, "coefficients", where);
  if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != spec.order)
    throw ConfigError(where + ".coefficients: expected " + std::to_string(spec.order) + " entries (a_1..a_n)");
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    spec.coefficients.push_back(coefficient_from_json(coeffs[i], where + ".coefficients[" + std::to_string(i) + "]"));
  spec.k = j.contains("k") ? detail::integer(j.at("k"), where + ".k") : 0;
  spec.M = j.contains("M") ? detail::number(j.at("M"), where + ".M") : 0.0;
  spec.alpha = detail::matrix(detail::require(j, "alpha", where), spec.order, where + ".alpha");
  spec.beta = detail::matrix(detail::require(j, "beta", where), spec.order, where + ".beta");
  spec.validate();
  return spec;
}

inline json problem_to_json(const BvpSpec& spec) {
  json coeffs = json::array();
  for (const auto& c : spec.coefficients) coeffs.push_back(coefficient_to_json(c));
  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"order", spec.order}, {"interval", {spec.a, spec.b}}, {"coefficients", coeffs}, {"k", spec.k},
          {"M", spec.M},         {"alpha", mat(spec.alpha)},       {"beta", mat(spec.beta)}};
}

// ---------------------------------------------------------------------------
// Run configuration

struct GridConfig {
  std::string type = "off-diagonal";  // off-diagonal | uniform | clustered
  int count = 15;
  int decades = 6;

  Grid make(double a, double b) const {
    if (type == "uniform") return Grid::uniform(a, b, count);
    if (type == "clustered") return Grid::clustered(a, b, count, decades);
    return Grid::off_diagonal(a, b, count);
  }
};

struct QuadratureConfig {
  int panels = 2;
  int nodes = 20;

  QuadratureRule make() const { return QuadratureRule(panels, nodes); }
};

struct BuildConfig {
  std::vector<int> orders{0};
};

struct VerifyConfig {
  double M0 = -1.0;
  double M1 = 1.0;
  std::vector<int> orders;  // empty: 0..n-1
  double bound = 1e-6;
  std::optional<int> k1;    // shift order of the second kernel, must match problem.k
};

struct SweepConfig {
  std::vector<double> M_values;
  std::vector<int> orders{0};
  int max_eigenvalues = 64;
  double bisect_tol = 1e-6;
};

struct EigConfig {
  double lo = 0.0;
  double hi = 60.0;
  int max_count = 16;
};

struct HOpConfig {
  int level = 0;
  bool literal_placement = false;
};

struct RunConfig {
  BvpSpec problem;
  double tolerance = 1e-12;
  unsigned threads = 1;
  GridConfig grid;
  QuadratureConfig quadrature;
  BuildConfig build;
  VerifyConfig verify;
  SweepConfig sweep;
  EigConfig eig;
  HOpConfig h_op;
  std::string out_dir = "out";
  bool svg = false;
};

inline RunConfig config_from_json(const json& j) {
  detail::check_keys(j, {"problem", "tolerance", "threads", "grid", "quadrature", "build", "verify", "sweep", "eig",
                         "h_op", "output"},
                     "config");
  RunConfig cfg;
  cfg.problem = problem_from_json(detail::require(j, "problem", "config"));
  if (j.contains("tolerance")) {
    cfg.tolerance = detail::number(j.at("tolerance"), "tolerance");
    if (!(cfg.tolerance > 0.0 && cfg.tolerance < 1e-2)) throw ConfigError("tolerance: expected a value in (0, 1e-2)");
  }
  if (j.contains("threads")) {
    const int t = detail::integer(j.at("threads"), "threads");
    if (t < 1) throw ConfigError("threads: expected a positive integer");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::check_keys(g, {"type", "count", "decades"}, "grid");
    if (g.contains("type")) {
      if (!g.at("type").is_string()) throw ConfigError("grid.type: expected a string");
      cfg.grid.type = g.at("type").get<std::string>();
      if (cfg.grid.type != "off-diagonal" && cfg.grid.type != "uniform" && cfg.grid.type != "clustered")
        throw ConfigError("grid.type: expected off-diagonal, uniform or clustered");
    }
    if (g.contains("count")) cfg.grid.count = detail::integer(g.at("count"), "grid.count");
    if (g.contains("decades")) cfg.grid.decades = detail::integer(g.at("decades"), "grid.decades");
    if (cfg.grid.count < 2 || cfg.grid.decades < 0) throw ConfigError("grid: count >= 2 and decades >= 0 required");
  }
  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    detail::check_keys(q, {"panels", "nodes"}, "quadrature");
    if (q.contains("panels")) cfg.quadrature.panels = detail::integer(q.at("panels"), "quadrature.panels");
    if (q.contains("nodes")) cfg.quadrature.nodes = detail::integer(q.at("nodes"), "quadrature.nodes");
    if (cfg.quadrature.panels < 1 || cfg.quadrature.nodes < 1) throw ConfigError("quadrature: positive sizes required");
  }
  if (j.contains("build")) {
    const auto& b = j.at("build");
    detail::check_keys(b, {"orders"}, "build");
    if (b.contains("orders")) cfg.build.orders = detail::integers(b.at("orders"), "build.orders");
  }
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    detail::check_keys(v, {"M0", "M1", "orders", "bound", "k1"}, "verify");
    if (v.contains("M0")) cfg.verify.M0 = detail::number(v.at("M0"), "verify.M0");
    if (v.contains("M1")) cfg.verify.M1 = detail::number(v.at("M1"), "verify.M1");
    if (v.contains("orders")) cfg.verify.orders = detail::integers(v.at("orders"), "verify.orders");
    if (v.contains("bound")) cfg.verify.bound = detail::number(v.at("bound"), "verify.bound");
    if (v.contains("k1")) cfg.verify.k1 = detail::integer(v.at("k1"), "verify.k1");
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::check_keys(s, {"M_values", "M_range", "orders", "max_eigenvalues", "bisect_tol"}, "sweep");
    if (s.contains("M_values")) cfg.sweep.M_values = detail::numbers(s.at("M_values"), "sweep.M_values");
    if (s.contains("M_range")) {
      const auto& r = s.at("M_range");
      detail::check_keys(r, {"min", "max", "count"}, "sweep.M_range");
      const double lo = detail::number(detail::require(r, "min", "sweep.M_range"), "sweep.M_range.min");
      const double hi = detail::number(detail::require(r, "max", "sweep.M_range"), "sweep.M_range.max");
      const int count = detail::integer(detail::require(r, "count", "sweep.M_range"), "sweep.M_range.count");
      if (count < 0 || (count > 1 && !(lo < hi))) throw ConfigError("sweep.M_range: need min < max and count >= 0");
      for (int i = 0; i < count; ++i) cfg.sweep.M_values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    if (s.contains("orders")) cfg.sweep.orders = detail::integers(s.at("orders"), "sweep.orders");
    if (s.contains("max_eigenvalues"))
      cfg.sweep.max_eigenvalues = detail::integer(s.at("max_eigenvalues"), "sweep.max_eigenvalues");
    if (s.contains("bisect_tol")) cfg.sweep.bisect_tol = detail::number(s.at("bisect_tol"), "sweep.bisect_tol");
  }
  if (j.contains("eig")) {
    const auto& e = j.at("eig");
    detail::check_keys(e, {"bracket", "max_count"}, "eig");
    if (e.contains("bracket")) {
      const auto br = detail::numbers(e.at("bracket"), "eig.bracket");
      if (br.size() != 2 || !(br[0] < br[1])) throw ConfigError("eig.bracket: expected [lo, hi] with lo < hi");
      cfg.eig.lo = br[0];
      cfg.eig.hi = br[1];
    }
    if (e.contains("max_count")) cfg.eig.max_count = detail::integer(e.at("max_count"), "eig.max_count");
  }
  if (j.contains("h_op")) {
    const auto& h = j.at("h_op");
    detail::check_keys(h, {"level", "placement"}, "h_op");
    if (h.contains("level")) cfg.h_op.level = detail::integer(h.at("level"), "h_op.level");
    if (h.contains("placement")) {
      const auto& p = h.at("placement");
      if (!p.is_string() || (p != "operator" && p != "literal"))
        throw ConfigError("h_op.placement: expected \"operator\" or \"literal\"");
      cfg.h_op.literal_placement = p == "literal";
    }
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    detail::check_keys(o, {"dir", "svg"}, "output");
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) throw ConfigError("output.dir: expected a string");
      cfg.out_dir = o.at("dir").get<std::string>();
    }
    if (o.contains("svg")) {
      if (!o.at("svg").is_boolean()) throw ConfigError("output.svg: expected a boolean");
      cfg.svg = o.at("svg").get<bool>();
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<const char*> header) : os_(os), columns_(header.size()) {
    bool first = true;
    for (const char* h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    if (sizeof...(Cells) != columns_) throw std::logic_error("CSV row width mismatch");
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }

  std::ostream& os_;
  std::size_t columns_;
};

// ---------------------------------------------------------------------------
// SVG

namespace detail {

// Diverging blue-white-red map on [-1, 1].
inline std::string diverging_color(double x) {
  x = std::clamp(x, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (x < 0) {
    r = static_cast<int>(std::lround(255 * (1 + x)));
    g = r;
  } else {
    g = static_cast<int>(std::lround(255 * (1 - x)));
    b = g;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Heatmap of values[j * t.size() + i] = f(t_i, s_j); cells follow the grid
/// index, not the coordinates, so clustered grids stay readable.
inline std::string heatmap_svg(const std::vector<double>& t, const std::vector<double>& s,
                               const std::vector<double>& values, const std::string& title) {
  const int cell = 12;
  const int margin = 40;
  const int w = static_cast<int>(t.size()) * cell;
  const int h = static_cast<int>(s.size()) * cell;
  double scale = 0.0;
  for (double v : values)
    if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * margin << "\" height=\"" << h + 2 * margin
     << "\">\n";
  os << "<text x=\"" << margin << "\" y=\"20\" font-family=\"monospace\" font-size=\"12\">" << title
     << " (max |value| " << format_number(scale) << ")</text>\n";
  for (std::size_t j = 0; j < s.size(); ++j) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double v = values.at(j * t.size() + i);
      const std::string color = std::isfinite(v) ? detail::diverging_color(scale > 0 ? v / scale : 0.0) : "#808080";
      // s increases upwards
      os << "<rect x=\"" << margin + static_cast<int>(i) * cell << "\" y=\""
         << margin + static_cast<int>(s.size() - 1 - j) * cell << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << color << "\"/>\n";
    }
  }
  os << "<text x=\"" << margin << "\" y=\"" << h + margin + 16
     << "\" font-family=\"monospace\" font-size=\"11\">t (index) &#8594;, s (index) &#8593;</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// Polyline plot of y against x with a zero line.
inline std::string line_plot_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title) {
  const double W = 640, H = 360, m = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << m << "\" y=\"20\" font-family=\"monospace\" font-size=\"12\">" << title << "</text>\n";
  if (x.size() >= 2 && x.size() == y.size()) {
    double x0 = x.front(), x1 = x.back();
    double y0 = 0.0, y1 = 0.0;
    for (double v : y)
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
    if (y1 == y0) y1 = y0 + 1.0;
    auto px = [&](double v) { return m + (W - 2 * m) * (v - x0) / (x1 - x0); };
    auto py = [&](double v) { return H - m - (H - 2 * m) * (v - y0) / (y1 - y0); };
    os << "<line x1=\"" << format_fixed(px(x0), 2) << "\" y1=\"" << format_fixed(py(0), 2) << "\" x2=\""
       << format_fixed(px(x1), 2) << "\" y2=\"" << format_fixed(py(0), 2) << "\" stroke=\"#999\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(y[i])) continue;
      os << format_fixed(px(x[i]), 2) << ',' << format_fixed(py(y[i]), 2) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << m << "\" y=\"" << H - 15 << "\" font-family=\"monospace\" font-size=\"11\">"
       << format_number(x0) << " .. " << format_number(x1) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace greenlink::io
