#pragma once

#include <map>
#include <string>
#include <vector>

#include "phlift/expr/polynomial.h"

namespace phlift {

/// Quotient of two exact polynomials. The denominator is kept primitive
/// (integer coefficients without common content) with a positive leading
/// coefficient; a constant denominator is always folded into the numerator.
/// No multivariate GCD is computed. Only exact divisibility of the numerator
/// by the whole denominator is cancelled.
class RatFn {
 public:
  RatFn() : num_(), den_(Poly::constant(Rational(1))) {}
  RatFn(Poly numerator);  // NOLINT
  RatFn(Poly numerator, Poly denominator);

  static RatFn constant(const Rational& c) { return RatFn(Poly::constant(c)); }

  const Poly& numerator() const { return num_; }
  const Poly& denominator() const { return den_; }

  bool is_polynomial() const { return den_.is_constant(); }
  bool is_zero() const { return num_.is_zero(); }

  /// The numerator; throws if the denominator is not constant.
  const Poly& as_polynomial() const;

  RatFn with_variables(const std::vector<std::string>& vars) const;

  RatFn operator-() const;
  friend RatFn operator+(const RatFn& a, const RatFn& b);
  friend RatFn operator-(const RatFn& a, const RatFn& b) { return a + (-b); }
  friend RatFn operator*(const RatFn& a, const RatFn& b);
  friend RatFn operator/(const RatFn& a, const RatFn& b);
  RatFn& operator+=(const RatFn& o) { return *this = *this + o; }
  RatFn& operator-=(const RatFn& o) { return *this = *this - o; }
  RatFn& operator*=(const RatFn& o) { return *this = *this * o; }

  RatFn pow(uint32_t k) const;
  RatFn derivative(const std::string& var) const;

  /// Substitutes variables by rational functions.
  RatFn compose(const std::map<std::string, RatFn>& subs) const;

  double evaluate(const std::map<std::string, double>& point) const;

  /// Identity test by cross-multiplication: a*d' - a'*d == 0.
  friend bool equivalent(const RatFn& a, const RatFn& b);

  /// Structural equality of the normalized (numerator, denominator) pair.
  friend bool operator==(const RatFn& a, const RatFn& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  std::string to_string() const;

 private:
  void normalize();

  Poly num_;
  Poly den_;
};

}  // namespace phlift
