#include "phlift/expr/rational.h"

#include <cctype>
#include <limits>
#include <stdexcept>

namespace phlift {
namespace {

int64_t narrow(__int128 value) {
  if (value > std::numeric_limits<int64_t>::max() ||
      value < -static_cast<__int128>(std::numeric_limits<int64_t>::max())) {
    throw std::overflow_error("rational arithmetic overflow");
  }
  return static_cast<int64_t>(value);
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational make_reduced(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("rational division by zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

int64_t gcd64(int64_t a, int64_t b) {
  return narrow(gcd128(a, b));
}

Rational::Rational(int64_t num, int64_t den) {
  if (den == 0) throw std::domain_error("rational division by zero");
  __int128 n = num;
  __int128 d = den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num_ = narrow(n);
  den_ = narrow(d);
}

Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  const auto slash = text.find('/');
  const auto dot = text.find('.');
  auto digits = [&](const std::string& s) {
    if (s.empty()) throw std::invalid_argument("bad rational literal: " + text);
    __int128 v = 0;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw std::invalid_argument("bad rational literal: " + text);
      }
      v = v * 10 + (c - '0');
      if (v > std::numeric_limits<int64_t>::max()) {
        throw std::overflow_error("rational literal too large: " + text);
      }
    }
    return v;
  };
  if (slash != std::string::npos) {
    return make_reduced(digits(text.substr(0, slash)),
                        digits(text.substr(slash + 1)));
  }
  if (dot != std::string::npos) {
    const std::string int_part = text.substr(0, dot);
    const std::string frac_part = text.substr(dot + 1);
    __int128 scale = 1;
    for (size_t i = 0; i < frac_part.size(); ++i) {
      scale *= 10;
      if (scale > std::numeric_limits<int64_t>::max()) {
        throw std::overflow_error("decimal literal too long: " + text);
      }
    }
    const __int128 whole = digits(int_part);
    const __int128 frac = frac_part.empty() ? 0 : digits(frac_part);
    return make_reduced(whole * scale + frac, scale);
  }
  return Rational(narrow(digits(text)), 1);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const {
  return make_reduced(-static_cast<__int128>(num_), den_);
}

Rational& Rational::operator+=(const Rational& o) {
  const __int128 n = static_cast<__int128>(num_) * o.den_ +
                     static_cast<__int128>(o.num_) * den_;
  const __int128 d = static_cast<__int128>(den_) * o.den_;
  return *this = make_reduced(n, d);
}

Rational& Rational::operator-=(const Rational& o) { return *this += -o; }

Rational& Rational::operator*=(const Rational& o) {
  // Cross-reduce first to keep intermediates small.
  const int64_t g1 = gcd64(num_, o.den_);
  const int64_t g2 = gcd64(o.num_, den_);
  const __int128 n = static_cast<__int128>(g1 ? num_ / g1 : num_) *
                     (g2 ? o.num_ / g2 : o.num_);
  const __int128 d = static_cast<__int128>(g2 ? den_ / g2 : den_) *
                     (g1 ? o.den_ / g1 : o.den_);
  return *this = make_reduced(n, d);
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.num_ == 0) throw std::domain_error("rational division by zero");
  return *this *= Rational(o.den_, o.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
  const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational Rational::pow(uint32_t exponent) const {
  Rational result(1);
  Rational base = *this;
  while (exponent > 0) {
    if (exponent & 1u) result *= base;
    exponent >>= 1;
    if (exponent > 0) base *= base;
  }
  return result;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
  return os << r.to_string();
}

}  // namespace phlift
