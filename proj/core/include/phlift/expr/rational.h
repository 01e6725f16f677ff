#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>

namespace phlift {

/// Exact rational number with 64-bit numerator and denominator. The value is
/// kept reduced with a positive denominator. Arithmetic that would overflow
/// throws std::overflow_error instead of wrapping.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(int64_t value) : num_(value), den_(1) {}  // NOLINT
  Rational(int64_t num, int64_t den);

  int64_t num() const { return num_; }
  int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return (num_ > 0) - (num_ < 0); }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  /// Parses "p", "p/q" or a decimal literal "12.375" into an exact value.
  static Rational parse(const std::string& text);

  /// "p" or "p/q".
  std::string to_string() const;

  Rational operator-() const;
  Rational& operator+=(const Rational& o);
  Rational& operator-=(const Rational& o);
  Rational& operator*=(const Rational& o);
  Rational& operator/=(const Rational& o);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a,
                                          const Rational& b);

  Rational abs() const { return sign() < 0 ? -*this : *this; }
  Rational pow(uint32_t exponent) const;

 private:
  int64_t num_{0};
  int64_t den_{1};
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

/// Greatest common divisor of |a| and |b|; gcd(0, 0) == 0.
int64_t gcd64(int64_t a, int64_t b);

}  // namespace phlift
