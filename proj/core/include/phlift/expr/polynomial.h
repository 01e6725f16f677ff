#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phlift/expr/rational.h"

namespace phlift {

/// One non-negative exponent per variable of the owning polynomial.
using Exponents = std::vector<uint32_t>;

inline uint32_t total_degree(const Exponents& e) {
  uint32_t d = 0;
  for (uint32_t v : e) d += v;
  return d;
}

/// Graded lexicographic order: total degree first, then lexicographic with
/// the first declared variable most significant.
struct GrlexLess {
  bool operator()(const Exponents& a, const Exponents& b) const {
    const uint32_t da = total_degree(a);
    const uint32_t db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(),
                                        b.end());
  }
};

inline bool is_zero_coefficient(const Rational& c) { return c.is_zero(); }
inline bool is_zero_coefficient(double c) { return c == 0.0; }
inline double to_double(const Rational& c) { return c.to_double(); }
inline double to_double(double c) { return c; }

inline std::string coefficient_string(const Rational& c) {
  return c.to_string();
}
inline std::string coefficient_string(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  return os.str();
}

/// Union of two variable lists: all of `a` in order, then the members of `b`
/// not already present, in their order.
inline std::vector<std::string> merge_variables(
    const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& v : b) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

/// Sparse multivariate polynomial over an ordered variable list. Terms are
/// stored in graded lexicographic order and zero coefficients are never kept.
/// Binary operations on polynomials with different variable lists first
/// merge the lists (see merge_variables).
template <typename C>
class Polynomial {
 public:
  using Coefficient = C;
  using TermMap = std::map<Exponents, C, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(std::vector<std::string> variables)
      : vars_(std::move(variables)) {}

  static Polynomial constant(const C& c, std::vector<std::string> vars = {}) {
    Polynomial p(std::move(vars));
    p.add_term(Exponents(p.vars_.size(), 0), c);
    return p;
  }

  static Polynomial variable(const std::string& name,
                             std::vector<std::string> vars = {}) {
    if (std::find(vars.begin(), vars.end(), name) == vars.end()) {
      vars.push_back(name);
    }
    Polynomial p(std::move(vars));
    Exponents e(p.vars_.size(), 0);
    e[p.index_of(name)] = 1;
    p.add_term(e, C(1));
    return p;
  }

  static Polynomial monomial(const C& c, const Exponents& e,
                             std::vector<std::string> vars) {
    Polynomial p(std::move(vars));
    p.add_term(e, c);
    return p;
  }

  const std::vector<std::string>& variables() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  size_t num_terms() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    return terms_.empty() ||
           (terms_.size() == 1 && phlift::total_degree(terms_.begin()->first) == 0);
  }

  C constant_term() const {
    if (terms_.empty()) return C(0);
    const auto& [e, c] = *terms_.begin();
    return phlift::total_degree(e) == 0 ? c : C(0);
  }

  uint32_t total_degree() const {
    return terms_.empty() ? 0 : phlift::total_degree(terms_.rbegin()->first);
  }

  uint32_t degree_in(const std::string& var) const {
    const auto idx = find_index(var);
    if (!idx) return 0;
    uint32_t d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[*idx]);
    return d;
  }

  /// Variables that actually occur with a positive exponent.
  std::vector<std::string> used_variables() const {
    std::vector<bool> used(vars_.size(), false);
    for (const auto& [e, c] : terms_) {
      for (size_t i = 0; i < e.size(); ++i) used[i] = used[i] || e[i] > 0;
    }
    std::vector<std::string> out;
    for (size_t i = 0; i < vars_.size(); ++i) {
      if (used[i]) out.push_back(vars_[i]);
    }
    return out;
  }

  const Exponents& leading_exponents() const {
    if (terms_.empty()) throw std::logic_error("zero polynomial has no terms");
    return terms_.rbegin()->first;
  }
  const C& leading_coefficient() const {
    if (terms_.empty()) throw std::logic_error("zero polynomial has no terms");
    return terms_.rbegin()->second;
  }

  std::optional<size_t> find_index(const std::string& var) const {
    const auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) return std::nullopt;
    return static_cast<size_t>(it - vars_.begin());
  }

  size_t index_of(const std::string& var) const {
    const auto idx = find_index(var);
    if (!idx) throw std::out_of_range("unknown polynomial variable: " + var);
    return *idx;
  }

  void add_term(const Exponents& e, const C& c) {
    if (e.size() != vars_.size()) {
      throw std::invalid_argument("exponent vector length mismatch");
    }
    if (is_zero_coefficient(c)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second = it->second + c;
      if (is_zero_coefficient(it->second)) terms_.erase(it);
    }
  }

  C coefficient(const Exponents& e) const {
    const auto it = terms_.find(e);
    return it == terms_.end() ? C(0) : it->second;
  }

  /// Re-expresses the polynomial over `vars`, which must contain every used
  /// variable. Variables may be added, dropped (if unused) or reordered.
  Polynomial with_variables(const std::vector<std::string>& vars) const {
    std::vector<int> map(vars_.size(), -1);
    for (size_t i = 0; i < vars_.size(); ++i) {
      const auto it = std::find(vars.begin(), vars.end(), vars_[i]);
      if (it != vars.end()) map[i] = static_cast<int>(it - vars.begin());
    }
    Polynomial out(vars);
    for (const auto& [e, c] : terms_) {
      Exponents ne(vars.size(), 0);
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (map[i] < 0) {
          throw std::invalid_argument("variable " + vars_[i] +
                                      " is used but not in the target list");
        }
        ne[map[i]] = e[i];
      }
      out.add_term(ne, c);
    }
    return out;
  }

  /// Renames variables in place of the list (same positions).
  Polynomial renamed(const std::vector<std::string>& new_names) const {
    if (new_names.size() != vars_.size()) {
      throw std::invalid_argument("rename list length mismatch");
    }
    Polynomial out = *this;
    out.vars_ = new_names;
    return out;
  }

  Polynomial operator-() const {
    Polynomial out(vars_);
    for (const auto& [e, c] : terms_) out.terms_.emplace(e, C(0) - c);
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.vars_ != vars_) {
      *this = with_variables(merge_variables(vars_, o.vars_));
      const Polynomial rhs = o.with_variables(vars_);
      for (const auto& [e, c] : rhs.terms_) add_term(e, c);
      return *this;
    }
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) { return *this += -o; }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    return a += b;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    return a -= b;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.vars_ != b.vars_) {
      const auto vars = merge_variables(a.vars_, b.vars_);
      return a.with_variables(vars) * b.with_variables(vars);
    }
    Polynomial out(a.vars_);
    Exponents e(a.vars_.size());
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        out.add_term(e, ca * cb);
      }
    }
    return out;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend Polynomial operator*(const C& s, const Polynomial& p) {
    Polynomial out(p.vars_);
    if (is_zero_coefficient(s)) return out;
    for (const auto& [e, c] : p.terms_) out.add_term(e, s * c);
    return out;
  }
  friend Polynomial operator*(const Polynomial& p, const C& s) {
    return s * p;
  }

  Polynomial pow(uint32_t k) const {
    Polynomial result = constant(C(1), vars_);
    Polynomial base = *this;
    while (k > 0) {
      if (k & 1u) result *= base;
      k >>= 1;
      if (k > 0) base *= base;
    }
    return result;
  }

  Polynomial derivative(const std::string& var) const {
    Polynomial out(vars_);
    const auto idx = find_index(var);
    if (!idx) return out;
    for (const auto& [e, c] : terms_) {
      if (e[*idx] == 0) continue;
      Exponents ne = e;
      ne[*idx] -= 1;
      out.add_term(ne, c * C(static_cast<int64_t>(e[*idx])));
    }
    return out;
  }

  /// Substitutes each listed variable by a polynomial. Unlisted variables
  /// are kept.
  Polynomial compose(const std::map<std::string, Polynomial>& subs) const {
    std::vector<std::string> vars;
    for (const auto& v : vars_) {
      if (!subs.count(v)) vars.push_back(v);
    }
    for (const auto& [name, p] : subs) vars = merge_variables(vars, p.vars_);
    Polynomial out(vars);
    for (const auto& [e, c] : terms_) {
      Polynomial term = constant(c, vars);
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        const auto it = subs.find(vars_[i]);
        if (it != subs.end()) {
          term *= it->second.pow(e[i]);
        } else {
          Exponents me(vars.size(), 0);
          me[std::find(vars.begin(), vars.end(), vars_[i]) - vars.begin()] =
              e[i];
          term *= monomial(C(1), me, vars);
        }
      }
      out += term;
    }
    return out.with_variables(vars);
  }

  /// Evaluates with `values[i]` bound to variables()[i].
  template <typename T>
  T evaluate(std::span<const T> values) const {
    if (values.size() != vars_.size()) {
      throw std::invalid_argument("evaluation point has wrong dimension");
    }
    T sum = T(0);
    for (const auto& [e, c] : terms_) {
      T term = T(to_double(c));
      for (size_t i = 0; i < e.size(); ++i) {
        for (uint32_t k = 0; k < e[i]; ++k) term *= values[i];
      }
      sum += term;
    }
    return sum;
  }

  double evaluate(const std::map<std::string, double>& point) const {
    std::vector<double> values(vars_.size(), 0.0);
    for (const auto& [e, c] : terms_) {
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] > 0 && !point.count(vars_[i])) {
          throw std::invalid_argument("unassigned variable " + vars_[i]);
        }
      }
    }
    for (size_t i = 0; i < vars_.size(); ++i) {
      const auto it = point.find(vars_[i]);
      if (it != point.end()) values[i] = it->second;
    }
    return evaluate(std::span<const double>(values));
  }

  template <typename D, typename F>
  Polynomial<D> map_coefficients(F&& f) const {
    Polynomial<D> out(vars_);
    for (const auto& [e, c] : terms_) out.add_term(e, f(c));
    return out;
  }

  /// Exact division by a single divisor. Returns the quotient when `divisor`
  /// divides this polynomial, std::nullopt otherwise.
  std::optional<Polynomial> divide_exact(const Polynomial& divisor) const {
    if (divisor.is_zero()) throw std::domain_error("division by zero polynomial");
    const auto vars = merge_variables(vars_, divisor.vars_);
    Polynomial rem = with_variables(vars);
    const Polynomial g = divisor.with_variables(vars);
    Polynomial quot(vars);
    const Exponents& lg = g.leading_exponents();
    const C lc = g.leading_coefficient();
    while (!rem.is_zero()) {
      const Exponents lr = rem.leading_exponents();
      Exponents shift(vars.size());
      for (size_t i = 0; i < vars.size(); ++i) {
        if (lr[i] < lg[i]) return std::nullopt;
        shift[i] = lr[i] - lg[i];
      }
      const C factor = rem.leading_coefficient() / lc;
      const Polynomial t = monomial(factor, shift, vars);
      quot += t;
      rem -= t * g;
    }
    return quot;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.vars_ == b.vars_) return a.terms_ == b.terms_;
    const auto vars = merge_variables(a.vars_, b.vars_);
    return a.with_variables(vars).terms_ == b.with_variables(vars).terms_;
  }

  /// Plain-text rendering, highest grlex term first, e.g. "x^2*y - 3/2".
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      std::string cs = coefficient_string(c);
      const bool negative = !cs.empty() && cs[0] == '-';
      if (negative) cs = cs.substr(1);
      if (first) {
        if (negative) os << "-";
      } else {
        os << (negative ? " - " : " + ");
      }
      first = false;
      std::string mono;
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += vars_[i];
        if (e[i] > 1) mono += "^" + std::to_string(e[i]);
      }
      if (mono.empty()) {
        os << cs;
      } else if (cs == "1") {
        os << mono;
      } else {
        os << cs << "*" << mono;
      }
    }
    return os.str();
  }

 private:
  std::vector<std::string> vars_;
  TermMap terms_;
};

using Poly = Polynomial<Rational>;
using PolyD = Polynomial<double>;

inline PolyD to_double_poly(const Poly& p) {
  return p.map_coefficients<double>([](const Rational& c) { return c.to_double(); });
}

}  // namespace phlift
