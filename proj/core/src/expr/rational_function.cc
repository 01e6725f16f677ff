#include "phlift/expr/rational_function.h"

#include <stdexcept>

namespace phlift {
namespace {

int64_t lcm64(int64_t a, int64_t b) {
  const int64_t g = gcd64(a, b);
  return (Rational(a) / Rational(g) * Rational(b)).num();
}

RatFn compose_poly(const Poly& p, const std::map<std::string, RatFn>& subs) {
  RatFn out;
  for (const auto& [e, c] : p.terms()) {
    RatFn term = RatFn::constant(c);
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      const auto& name = p.variables()[i];
      const auto it = subs.find(name);
      if (it != subs.end()) {
        term *= it->second.pow(e[i]);
      } else {
        term *= RatFn(Poly::variable(name).pow(e[i]));
      }
    }
    out += term;
  }
  return out;
}

}  // namespace

RatFn::RatFn(Poly numerator)
    : num_(std::move(numerator)), den_(Poly::constant(Rational(1))) {
  normalize();
}

RatFn::RatFn(Poly numerator, Poly denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  normalize();
}

void RatFn::normalize() {
  if (den_.is_zero()) throw std::domain_error("zero denominator");
  const auto vars = merge_variables(num_.variables(), den_.variables());
  num_ = num_.with_variables(vars);
  den_ = den_.with_variables(vars);
  if (num_.is_zero()) {
    den_ = Poly::constant(Rational(1), vars);
    return;
  }
  if (den_.is_constant()) {
    const Rational c = den_.constant_term();
    if (!c.is_one()) num_ = num_ * (Rational(1) / c);
    den_ = Poly::constant(Rational(1), vars);
    return;
  }
  int64_t l = 1;
  int64_t g = 0;
  for (const auto& [e, c] : den_.terms()) l = lcm64(l, c.den());
  for (const auto& [e, c] : den_.terms()) {
    g = gcd64(g, (c * Rational(l)).num());
  }
  Rational scale = Rational(l) / Rational(g);
  if (den_.leading_coefficient().sign() < 0) scale = -scale;
  if (!scale.is_one()) {
    num_ = num_ * scale;
    den_ = den_ * scale;
  }
  if (auto q = num_.divide_exact(den_)) {
    num_ = q->with_variables(vars);
    den_ = Poly::constant(Rational(1), vars);
  }
}

const Poly& RatFn::as_polynomial() const {
  if (!is_polynomial()) {
    throw std::logic_error("rational function is not a polynomial: " +
                           to_string());
  }
  return num_;
}

RatFn RatFn::with_variables(const std::vector<std::string>& vars) const {
  return RatFn(num_.with_variables(vars), den_.with_variables(vars));
}

RatFn RatFn::operator-() const {
  RatFn out = *this;
  out.num_ = -out.num_;
  return out;
}

RatFn operator+(const RatFn& a, const RatFn& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.den_ == b.den_) return RatFn(a.num_ + b.num_, a.den_);
  if (!a.den_.is_constant() && !b.den_.is_constant()) {
    if (auto e = b.den_.divide_exact(a.den_)) {
      return RatFn(a.num_ * *e + b.num_, b.den_);
    }
    if (auto e = a.den_.divide_exact(b.den_)) {
      return RatFn(a.num_ + b.num_ * *e, a.den_);
    }
  }
  return RatFn(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RatFn operator*(const RatFn& a, const RatFn& b) {
  if (a.is_zero() || b.is_zero()) return RatFn();
  Poly n1 = a.num_, d1 = a.den_, n2 = b.num_, d2 = b.den_;
  if (!d2.is_constant()) {
    if (auto q = n1.divide_exact(d2)) {
      n1 = *q;
      d2 = Poly::constant(Rational(1));
    }
  }
  if (!d1.is_constant()) {
    if (auto q = n2.divide_exact(d1)) {
      n2 = *q;
      d1 = Poly::constant(Rational(1));
    }
  }
  return RatFn(n1 * n2, d1 * d2);
}

RatFn operator/(const RatFn& a, const RatFn& b) {
  if (b.is_zero()) throw std::domain_error("division by zero rational function");
  RatFn inv;
  inv.num_ = b.den_;
  inv.den_ = b.num_;
  inv.normalize();
  return a * inv;
}

RatFn RatFn::pow(uint32_t k) const {
  return RatFn(num_.pow(k), den_.pow(k));
}

RatFn RatFn::derivative(const std::string& var) const {
  const Poly dn = num_.derivative(var);
  if (den_.is_constant()) return RatFn(dn);
  const Poly dd = den_.derivative(var);
  if (dd.is_zero()) return RatFn(dn, den_);
  return RatFn(dn * den_ - num_ * dd, den_ * den_);
}

RatFn RatFn::compose(const std::map<std::string, RatFn>& subs) const {
  return compose_poly(num_, subs) / compose_poly(den_, subs);
}

double RatFn::evaluate(const std::map<std::string, double>& point) const {
  const double d = den_.evaluate(point);
  if (d == 0.0) throw std::domain_error("denominator vanishes at point");
  return num_.evaluate(point) / d;
}

bool equivalent(const RatFn& a, const RatFn& b) {
  return (a.num_ * b.den_ - b.num_ * a.den_).is_zero();
}

std::string RatFn::to_string() const {
  if (is_polynomial()) return num_.to_string();
  return "(" + num_.to_string() + ")/(" + den_.to_string() + ")";
}

}  // namespace phlift
