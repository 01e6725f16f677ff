#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "phlift/expr/rational.h"
#include "phlift/expr/rational_function.h"

namespace phlift {

enum class Primitive { kExp, kSin, kCos, kLn };

const char* primitive_name(Primitive f);
std::optional<Primitive> primitive_from_name(const std::string& name);

/// Immutable symbolic expression. All factory functions return canonical
/// trees: nested sums and products are flattened, numeric constants folded,
/// like terms and equal product bases merged, and children sorted by the
/// total order defined by compare(). Two canonical expressions are equal
/// exactly when their trees are identical.
class Expr {
 public:
  enum class Kind { kConstant, kVariable, kSum, kProduct, kPower, kQuotient, kCall };

  /// The zero constant.
  Expr();
  Expr(const Rational& value);  // NOLINT
  Expr(int64_t value) : Expr(Rational(value)) {}  // NOLINT
  Expr(int value) : Expr(Rational(value)) {}  // NOLINT

  static Expr constant(const Rational& value) { return Expr(value); }
  static Expr variable(const std::string& name);
  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr power(const Expr& base, uint32_t exponent);
  static Expr quotient(const Expr& numerator, const Expr& denominator);
  static Expr call(Primitive f, const Expr& argument);

  Kind kind() const;
  bool is_constant() const { return kind() == Kind::kConstant; }
  bool is_zero() const;
  bool is_one() const;

  /// Valid for kConstant.
  const Rational& value() const;
  /// Valid for kVariable.
  const std::string& name() const;
  /// Terms of a sum, factors of a product, {base} for a power,
  /// {numerator, denominator} for a quotient, {argument} for a call.
  std::span<const Expr> children() const;
  /// Valid for kPower.
  uint32_t exponent() const;
  /// Valid for kCall.
  Primitive function() const;

  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend std::strong_ordering operator<=>(const Expr& a, const Expr& b);

  friend Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b) {
    return product({a, b});
  }
  friend Expr operator/(const Expr& a, const Expr& b) {
    return quotient(a, b);
  }
  Expr operator-() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

std::ostream& operator<<(std::ostream& os, const Expr& e);

Expr exp(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr ln(const Expr& e);

/// Exact partial derivative.
Expr differentiate(const Expr& e, const std::string& var);

/// Replaces variables by expressions.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& subs);

/// Names of the variables occurring in `e`.
std::set<std::string> free_variables(const Expr& e);

/// True when `e` contains an exp/sin/cos/ln call.
bool has_primitive(const Expr& e);

/// True when `e` is built only from constants, variables, sums, products and
/// powers (no quotients or calls).
bool is_polynomial_expr(const Expr& e);

/// Double-precision evaluation. Throws EvaluationError on division by zero,
/// ln of a non-positive value, or an unassigned variable.
double eval(const Expr& e, const std::map<std::string, double>& point);

/// Expression compiled against a fixed variable ordering for repeated
/// evaluation, e.g. inside an integrator.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, const std::vector<std::string>& vars);
  double operator()(std::span<const double> values) const;

 private:
  enum class Op : uint8_t { kConst, kVar, kAdd, kMul, kPow, kDiv, kExp, kSin, kCos, kLn };
  struct Instr {
    Op op;
    uint32_t arg;  // variable index, child count, or exponent
    double value;
  };
  std::vector<Instr> program_;
  mutable std::vector<double> stack_;
};

/// Maps primitive calls (and optionally variables, for renaming) to the
/// names of the variables that replace them.
using GeneratorMap = std::map<Expr, std::string>;

/// Rewrites `e` as a rational function in which every primitive call is
/// replaced by its generator variable. exp(k*u) with integer k >= 1 is
/// recognized as (generator of exp(u))^k. Variables listed as keys are
/// renamed; other variables keep their names. Returns std::nullopt when some
/// primitive has no matching generator.
std::optional<RatFn> as_rational(const Expr& e, const GeneratorMap& generators);

/// Converts a polynomial-only expression to a Poly; std::nullopt otherwise.
std::optional<Poly> as_polynomial(const Expr& e);

Expr to_expr(const Poly& p);
Expr to_expr(const RatFn& r);

}  // namespace phlift
