#pragma once

// Polynomial matrix maps F: K^N -> M_{m,n}, a small text format for them,
// and the two ratio-divergence demonstrations (the plane cusp and the family
// of cusps cut out of M^3_{3,3} by a linear map).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geooracle.hpp"
#include "numkernel.hpp"
#include "variety.hpp"

namespace rankpath {

using Exponents = std::vector<std::uint32_t>;

inline std::uint64_t total_degree(const Exponents& e) {
  std::uint64_t s = 0;
  for (auto x : e) s += x;
  return s;
}

/// Graded lexicographic order, largest first: higher total degree wins, ties
/// go to the lexicographically larger exponent vector.
struct GrlexGreater {
  bool operator()(const Exponents& a, const Exponents& b) const {
    const auto da = total_degree(a), db = total_degree(b);
    if (da != db) return da > db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

inline constexpr std::uint64_t kMaxExponent = std::uint64_t{1} << 31;

/// Sparse multivariate polynomial with real coefficients in a fixed number of
/// variables. Zero coefficients are never stored.
class Polynomial {
 public:
  using Terms = std::map<Exponents, double, GrlexGreater>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, double c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  static Polynomial variable(std::size_t nvars, std::size_t index) {
    Exponents e(nvars, 0);
    e.at(index) = 1;
    Polynomial p(nvars);
    p.add_term(std::move(e), 1.0);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add_term(Exponents e, double c) {
    if (e.size() != nvars_) throw std::invalid_argument("exponent vector has the wrong length");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(std::move(e), c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
  }
  Polynomial operator-() const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
  }
  Polynomial operator-(const Polynomial& o) const { return *this + (-o); }

  Polynomial operator*(const Polynomial& o) const {
    Polynomial r(nvars_);
    for (const auto& [ea, ca] : terms_) {
      for (const auto& [eb, cb] : o.terms_) {
        Exponents e(nvars_);
        for (std::size_t i = 0; i < nvars_; ++i) {
          const std::uint64_t s = std::uint64_t{ea[i]} + eb[i];
          if (s > kMaxExponent) throw std::overflow_error("exponent overflow");
          e[i] = static_cast<std::uint32_t>(s);
        }
        r.add_term(std::move(e), ca * cb);
      }
    }
    return r;
  }

  Polynomial pow(std::uint64_t k) const {
    if (terms_.size() == 1) {
      // Monomial powers are formed directly so large exponents stay cheap.
      const auto& [e, c] = *terms_.begin();
      Exponents out(nvars_);
      for (std::size_t i = 0; i < nvars_; ++i) {
        const std::uint64_t s = std::uint64_t{e[i]} * k;
        if (e[i] != 0 && (s > kMaxExponent || s / e[i] != k)) throw std::overflow_error("exponent overflow");
        out[i] = static_cast<std::uint32_t>(s);
      }
      Polynomial r(nvars_);
      r.add_term(std::move(out), std::pow(c, static_cast<double>(k)));
      return r;
    }
    Polynomial result = constant(nvars_, 1.0);
    Polynomial base = *this;
    while (k > 0) {
      if (k & 1u) result = result * base;
      k >>= 1u;
      if (k > 0) base = base * base;
    }
    return result;
  }

  template <class T>
  T evaluate(std::span<const T> x) const {
    if (x.size() != nvars_) throw std::invalid_argument("evaluate: point has the wrong arity");
    T sum{};
    for (const auto& [e, c] : terms_) {
      T term = T(c);
      for (std::size_t i = 0; i < nvars_; ++i) term *= ipow(x[i], e[i]);
      sum += term;
    }
    return sum;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

 private:
  template <class T>
  static T ipow(T base, std::uint32_t k) {
    T r = T(1.0);
    while (k > 0) {
      if (k & 1u) r *= base;
      k >>= 1u;
      if (k > 0) base *= base;
    }
    return r;
  }

  std::size_t nvars_;
  Terms terms_;
};

/// F: K^N -> M_{rows,cols} with polynomial entries (row-major).
struct PolyMap {
  std::vector<std::string> variables;
  int rows = 1;
  int cols = 1;
  std::vector<Polynomial> entries;

  const Polynomial& at(int i, int j) const { return entries.at(static_cast<std::size_t>(i * cols + j)); }
  std::size_t arity() const { return variables.size(); }

  friend bool operator==(const PolyMap&, const PolyMap&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

class PolyParser {
 public:
  explicit PolyParser(std::string_view text) : src_(text) {}

  PolyMap parse_map() {
    PolyMap f;
    expect_keyword("vars");
    expect(':');
    f.variables.push_back(expect_ident());
    while (accept(',')) f.variables.push_back(expect_ident());
    for (std::size_t i = 0; i < f.variables.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (f.variables[i] == f.variables[j]) fail("duplicate variable '" + f.variables[i] + "'");
    vars_ = &f.variables;
    expect(';');
    expect_keyword("rows");
    expect(':');
    f.rows = expect_dimension();
    expect(';');
    expect_keyword("cols");
    expect(':');
    f.cols = expect_dimension();
    expect(';');

    const std::size_t nv = f.variables.size();
    f.entries.assign(static_cast<std::size_t>(f.rows) * static_cast<std::size_t>(f.cols), Polynomial(nv));
    std::vector<bool> seen(f.entries.size(), false);
    skip_ws();
    while (!at_end()) {
      const int line = line_, col = col_;
      expect('[');
      const std::uint64_t i = expect_uint();
      expect(',');
      const std::uint64_t j = expect_uint();
      expect(']');
      if (i < 1 || j < 1 || i > static_cast<std::uint64_t>(f.rows) || j > static_cast<std::uint64_t>(f.cols))
        throw ParseError("entry index out of range", line, col);
      const std::size_t k = static_cast<std::size_t>((i - 1) * static_cast<std::uint64_t>(f.cols) + (j - 1));
      if (seen[k]) throw ParseError("entry declared twice", line, col);
      seen[k] = true;
      expect('=');
      f.entries[k] = parse_poly();
      skip_ws();
      // The separator after the final declaration is optional.
      if (!accept(';')) {
        skip_ws();
        if (!at_end()) fail("expected ';'");
      }
      skip_ws();
    }
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c && !at_end()) {
      advance();
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string expect_ident() {
    skip_ws();
    if (!ident_start(peek())) fail("expected identifier");
    const std::size_t start = pos_;
    while (!at_end() && ident_char(peek())) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  void expect_keyword(std::string_view kw) {
    skip_ws();
    const int line = line_, col = col_;
    if (!ident_start(peek())) fail("expected '" + std::string(kw) + "'");
    if (expect_ident() != kw) throw ParseError("expected '" + std::string(kw) + "'", line, col);
  }

  std::uint64_t expect_uint() {
    skip_ws();
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected unsigned integer");
    const int line = line_, col = col_;
    std::uint64_t v = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + static_cast<std::uint64_t>(peek() - '0');
      if (v > kMaxExponent) throw ParseError("integer overflow (limit 2^31)", line, col);
      advance();
    }
    return v;
  }

  int expect_dimension() {
    const int line = line_, col = col_;
    const std::uint64_t v = expect_uint();
    if (v < 1 || v > 4096) throw ParseError("dimension must lie in [1, 4096]", line, col);
    return static_cast<int>(v);
  }

  double expect_number() {
    skip_ws();
    const std::size_t start = pos_;
    auto digits = [&] {
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
    };
    digits();
    if (peek() == '.') {
      advance();
      digits();
    }
    if (pos_ > start && (peek() == 'e' || peek() == 'E')) {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("malformed exponent in number");
      digits();
    }
    const std::string_view tok = src_.substr(start, pos_ - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("malformed number");
    return v;
  }

  // poly := ["+"|"-"] term (("+"|"-") term)*
  Polynomial parse_poly() {
    skip_ws();
    bool negate = false;
    if (accept('-')) negate = true;
    else accept('+');
    Polynomial p = parse_term();
    if (negate) p = -p;
    while (true) {
      skip_ws();
      const int line = line_, col = col_;
      if (accept('+')) p = p + operand(line, col, &PolyParser::parse_term);
      else if (accept('-')) p = p - operand(line, col, &PolyParser::parse_term);
      else break;
    }
    return p;
  }

  // term := factor ("*" factor)*
  Polynomial parse_term() {
    Polynomial p = parse_factor();
    while (true) {
      skip_ws();
      const int line = line_, col = col_;
      if (!accept('*')) break;
      p = p * operand(line, col, &PolyParser::parse_factor);
    }
    return p;
  }

  Polynomial operand(int op_line, int op_col, Polynomial (PolyParser::*next)()) {
    skip_ws();
    if (at_end() || peek() == ';' || peek() == ')') throw ParseError("dangling operator", op_line, op_col);
    return (this->*next)();
  }

  // factor := ident ("^" uint)? | number | "(" poly ")"
  Polynomial parse_factor() {
    skip_ws();
    const std::size_t nv = vars_->size();
    if (at_end()) fail("unexpected end of input, expected a factor");
    if (accept('(')) {
      Polynomial p = parse_poly();
      expect(')');
      return p;
    }
    if (ident_start(peek())) {
      const int line = line_, col = col_;
      const std::string name = expect_ident();
      const auto it = std::find(vars_->begin(), vars_->end(), name);
      if (it == vars_->end()) throw ParseError("unknown identifier '" + name + "'", line, col);
      Polynomial v = Polynomial::variable(nv, static_cast<std::size_t>(it - vars_->begin()));
      if (accept('^')) {
        const int eline = line_, ecol = col_;
        const std::uint64_t k = expect_uint();
        try {
          return v.pow(k);
        } catch (const std::overflow_error&) {
          throw ParseError("exponent overflow", eline, ecol);
        }
      }
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') return Polynomial::constant(nv, expect_number());
    fail(std::string("unexpected '") + peek() + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  const std::vector<std::string>* vars_ = nullptr;
};

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline PolyMap parse_poly_map(std::string_view text) {
  try {
    return detail::PolyParser(text).parse_map();
  } catch (const std::overflow_error& e) {
    throw ParseError(e.what(), 0, 0);
  }
}

/// Canonical text: terms in graded-lex order, shortest round-trip coefficients.
inline std::string print_polynomial(const Polynomial& p, const std::vector<std::string>& vars) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    const bool neg = c < 0.0;
    const double mag = std::abs(c);
    if (first) out += neg ? "-" : "";
    else out += neg ? " - " : " + ";
    first = false;

    std::string mono;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += vars[i];
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    if (mono.empty()) out += detail::format_number(mag);
    else if (mag == 1.0) out += mono;
    else out += detail::format_number(mag) + "*" + mono;
  }
  return out;
}

inline std::string print_poly_map(const PolyMap& f) {
  std::ostringstream os;
  os << "vars: ";
  for (std::size_t i = 0; i < f.variables.size(); ++i) os << (i ? ", " : "") << f.variables[i];
  os << "; rows: " << f.rows << "; cols: " << f.cols << ";\n";
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j)
      if (!f.at(i, j).is_zero())
        os << "[" << i + 1 << "," << j + 1 << "] = " << print_polynomial(f.at(i, j), f.variables) << ";\n";
  return os.str();
}

/// Entrywise evaluation at a real point (real-field result).
inline Matrix evaluate(const PolyMap& f, std::span<const double> point) {
  if (point.size() != f.arity())
    throw DimensionError("evaluate: expected " + std::to_string(f.arity()) + " coordinates, got " +
                                std::to_string(point.size()));
  Eigen::MatrixXd a(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) a(i, j) = f.at(i, j).evaluate<double>(point);
  return Matrix::real(a);
}

/// Entrywise evaluation at a complex point (complex-field result).
inline Matrix evaluate(const PolyMap& f, std::span<const Scalar> point) {
  if (point.size() != f.arity())
    throw DimensionError("evaluate: expected " + std::to_string(f.arity()) + " coordinates, got " +
                                std::to_string(point.size()));
  DenseMatrix a(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) a(i, j) = f.at(i, j).evaluate<Scalar>(point);
  return Matrix::complex(std::move(a));
}

template <class T>
double pullback_residual(const PolyMap& f, std::span<const T> point, const VarietyDescriptor& d) {
  d.validate();
  if (f.rows != d.m || f.cols != d.n) throw DimensionError("map shape does not match the descriptor");
  Matrix x = evaluate(f, point);
  if (d.field == ScalarField::Complex && x.field() == ScalarField::Real) x = Matrix::complex(x.dense());
  return membership_residual(x, d);
}

inline const char* kCuspFamilyMapText =
    "vars: x, y, z; rows: 3; cols: 3;\n"
    "[1,1] = x; [1,3] = z;\n"
    "[2,1] = y; [2,2] = x;\n"
    "[3,2] = y; [3,3] = x;\n";

/// F(x,y,z) = [[x,0,z],[y,x,0],[0,y,x]], det F = x^3 + y^2 z. Its preimage of
/// M^3_{3,3} is a family of plane cusps degenerating to a line.
inline PolyMap cusp_family_map() { return parse_poly_map(kCuspFamilyMapText); }

// ---------------------------------------------------------------------------
// Plane cusp x^3 = y^2.

struct ParamCurvePair {
  std::function<Eigen::VectorXd(double)> parametrization;
  std::function<Eigen::VectorXd(double)> mirror;
  std::string label;
};

/// Branches (s^2, s^3) and (s^2, -s^3); they meet only at the origin.
inline ParamCurvePair plane_cusp_pair() {
  return ParamCurvePair{[](double s) { return Eigen::Vector2d(s * s, s * s * s).eval(); },
                        [](double s) { return Eigen::Vector2d(s * s, -s * s * s).eval(); }, "plane cusp x^3 = y^2"};
}

/// Length of the curve on [a, b] by polylines, doubling the segment count
/// until successive estimates agree to rel_tol.
inline double polyline_arc_length(const std::function<Eigen::VectorXd(double)>& curve, double a, double b,
                                  double rel_tol = 1e-8) {
  auto polyline = [&](long n) {
    double len = 0.0;
    Eigen::VectorXd prev = curve(a);
    for (long k = 1; k <= n; ++k) {
      Eigen::VectorXd cur = curve(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
      len += (cur - prev).norm();
      prev = std::move(cur);
    }
    return len;
  };
  long n = 16;
  double prev = polyline(n);
  while (n < (1L << 24)) {
    n *= 2;
    const double cur = polyline(n);
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

struct RatioRow {
  double s = 0.0;
  double d_out = 0.0;
  double d_in = 0.0;
  double ratio = 0.0;
};

/// For each s, the chord between the two cusp branches at parameter s and the
/// length of the path along the curve through the origin.
inline std::vector<RatioRow> cusp_ratio_table(const std::vector<double>& s_values) {
  const ParamCurvePair cusp = plane_cusp_pair();
  std::vector<RatioRow> rows;
  rows.reserve(s_values.size());
  for (double s : s_values) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("cusp parameter must lie in (0, 1]");
    RatioRow r;
    r.s = s;
    r.d_out = (cusp.parametrization(s) - cusp.mirror(s)).norm();
    r.d_in = polyline_arc_length(cusp.parametrization, 0.0, s) + polyline_arc_length(cusp.mirror, 0.0, s);
    r.ratio = r.d_in / r.d_out;
    rows.push_back(r);
  }
  return rows;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs two or more points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline std::vector<double> log_spaced(double lo, double hi, int steps) {
  if (steps < 2 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_spaced needs 0 < lo <= hi, steps >= 2");
  std::vector<double> out;
  for (int k = 0; k < steps; ++k)
    out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (steps - 1)));
  return out;
}

// ---------------------------------------------------------------------------
// Surface V(x^3 - y^2 z), parametrized by (u, v) -> (u^2 v, u^3, v^3).

inline Eigen::Vector3d cusp_surface_point(double u, double v) { return {u * u * v, u * u * u, v * v * v}; }

/// Residual of a point of R^3 against V(x^3 - y^2 z) through the example map:
/// det F(x, y, -z) = x^3 - y^2 z.
inline double cusp_surface_residual(const Eigen::Vector3d& x) {
  static const PolyMap f = cusp_family_map();
  const double pt[3] = {x(0), x(1), -x(2)};
  return pullback_residual<double>(f, std::span<const double>(pt, 3), VarietyDescriptor(3, 3, 3, ScalarField::Real));
}

struct SurfaceGridOptions {
  int u_steps_per_s = 32;  // grid spacing in u is s / u_steps_per_s
  int v_levels = 4;        // v in 1 + v_spacing * {-v_levels..v_levels}
  double v_spacing = 0.02;
};

/// Inner-distance estimate between (s^2, s^3, 1) and (s^2, -s^3, 1) on the
/// surface: shortest path in the graph of surface samples over a (u, v) grid,
/// edges joining parametric grid neighbours.
inline double surface_graph_distance(double s, const SurfaceGridOptions& opt = {}) {
  const int ku = opt.u_steps_per_s + opt.u_steps_per_s / 4;
  const int nu = 2 * ku + 1;
  const int nv = 2 * opt.v_levels + 1;
  std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(nu * nv));
  auto id = [nv](int a, int b) { return static_cast<std::size_t>(a * nv + b); };
  for (int a = 0; a < nu; ++a) {
    const double u = s * (static_cast<double>(a - ku) / opt.u_steps_per_s);
    for (int b = 0; b < nv; ++b) pts[id(a, b)] = cusp_surface_point(u, 1.0 + opt.v_spacing * (b - opt.v_levels));
  }
  Adjacency graph(pts.size());
  for (int a = 0; a < nu; ++a) {
    for (int b = 0; b < nv; ++b) {
      for (int da = 0; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db <= 0) continue;
          const int a2 = a + da, b2 = b + db;
          if (a2 >= nu || b2 < 0 || b2 >= nv) continue;
          const double w = (pts[id(a, b)] - pts[id(a2, b2)]).norm();
          graph[id(a, b)].push_back({id(a2, b2), w});
          graph[id(a2, b2)].push_back({id(a, b), w});
        }
      }
    }
  }
  const auto len = shortest_path_length(graph, id(ku + opt.u_steps_per_s, opt.v_levels),
                                        id(ku - opt.u_steps_per_s, opt.v_levels));
  return len.value_or(std::numeric_limits<double>::infinity());
}

inline std::vector<RatioRow> surface_demo(const std::vector<double>& s_values, const SurfaceGridOptions& opt = {}) {
  std::vector<RatioRow> rows;
  rows.reserve(s_values.size());
  for (double s : s_values) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("surface parameter must lie in (0, 1]");
    RatioRow r;
    r.s = s;
    r.d_out = (cusp_surface_point(s, 1.0) - cusp_surface_point(-s, 1.0)).norm();
    r.d_in = surface_graph_distance(s, opt);
    r.ratio = r.d_in / r.d_out;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rankpath
