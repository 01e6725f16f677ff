#include "phlift/expr/expr.h"

#include <cctype>
#include <cmath>
#include <ostream>
#include <sstream>

#include "phlift/errors.h"

namespace phlift {

struct Expr::Node {
  Kind kind{Kind::kConstant};
  Rational value;
  std::string name;
  std::vector<Expr> children;
  uint32_t exponent{0};
  Primitive function{Primitive::kExp};
};

namespace {

// Orders names so that x2 < x10.
std::strong_ordering natural_compare(const std::string& a,
                                     const std::string& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
      nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
      if (na.size() != nb.size()) return na.size() <=> nb.size();
      if (auto c = na <=> nb; c != 0) return c;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return a[i] <=> b[j];
    ++i;
    ++j;
  }
  if (auto c = (a.size() - i) <=> (b.size() - j); c != 0) return c;
  return a <=> b;
}

// Splits c*rest into (c, rest).
std::pair<Rational, Expr> split_coefficient(const Expr& term) {
  if (term.kind() == Expr::Kind::kProduct) {
    const auto f = term.children();
    if (f.front().is_constant()) {
      std::vector<Expr> rest(f.begin() + 1, f.end());
      if (rest.size() == 1) return {f.front().value(), rest.front()};
      return {f.front().value(), Expr::product(std::move(rest))};
    }
  }
  return {Rational(1), term};
}

std::pair<Expr, uint32_t> split_power(const Expr& factor) {
  if (factor.kind() == Expr::Kind::kPower) {
    return {factor.children().front(), factor.exponent()};
  }
  return {factor, 1};
}

bool is_negative_term(const Expr& e) {
  if (e.is_constant()) return e.value().sign() < 0;
  if (e.kind() == Expr::Kind::kProduct) {
    const auto f = e.children();
    return f.front().is_constant() && f.front().value().sign() < 0;
  }
  return false;
}

}  // namespace

const char* primitive_name(Primitive f) {
  switch (f) {
    case Primitive::kExp: return "exp";
    case Primitive::kSin: return "sin";
    case Primitive::kCos: return "cos";
    case Primitive::kLn: return "ln";
  }
  return "?";
}

std::optional<Primitive> primitive_from_name(const std::string& name) {
  if (name == "exp") return Primitive::kExp;
  if (name == "sin") return Primitive::kSin;
  if (name == "cos") return Primitive::kCos;
  if (name == "ln") return Primitive::kLn;
  return std::nullopt;
}

Expr::Expr() : Expr(Rational(0)) {}

Expr::Expr(const Rational& value) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kConstant;
  node->value = value;
  node_ = std::move(node);
}

Expr Expr::variable(const std::string& name) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kVariable;
  node->name = name;
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::sum(std::vector<Expr> terms) {
  Rational constant(0);
  std::map<Expr, Rational> grouped;
  std::vector<Expr> flat;
  for (auto& t : terms) {
    if (t.kind() == Kind::kSum) {
      for (const auto& c : t.children()) flat.push_back(c);
    } else {
      flat.push_back(std::move(t));
    }
  }
  for (const auto& t : flat) {
    if (t.is_constant()) {
      constant += t.value();
      continue;
    }
    auto [c, rest] = split_coefficient(t);
    auto [it, inserted] = grouped.try_emplace(rest, c);
    if (!inserted) it->second += c;
  }
  std::vector<Expr> out;
  if (!constant.is_zero()) out.emplace_back(constant);
  for (const auto& [rest, c] : grouped) {
    if (c.is_zero()) continue;
    if (c.is_one()) {
      out.push_back(rest);
    } else {
      out.push_back(product({Expr(c), rest}));
    }
  }
  if (out.empty()) return Expr(Rational(0));
  if (out.size() == 1) return out.front();
  auto node = std::make_shared<Node>();
  node->kind = Kind::kSum;
  node->children = std::move(out);
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::product(std::vector<Expr> factors) {
  Rational constant(1);
  std::map<Expr, uint32_t> grouped;
  std::vector<Expr> flat;
  for (auto& f : factors) {
    if (f.kind() == Kind::kProduct) {
      for (const auto& c : f.children()) flat.push_back(c);
    } else {
      flat.push_back(std::move(f));
    }
  }
  for (const auto& f : flat) {
    if (f.is_constant()) {
      constant *= f.value();
      continue;
    }
    auto [base, k] = split_power(f);
    grouped[base] += k;
  }
  if (constant.is_zero()) return Expr(Rational(0));
  std::vector<Expr> out;
  if (!constant.is_one()) out.emplace_back(constant);
  for (const auto& [base, k] : grouped) out.push_back(power(base, k));
  // A merged power may itself have produced a constant or a product.
  bool needs_refold = false;
  for (size_t i = constant.is_one() ? 0 : 1; i < out.size(); ++i) {
    if (out[i].is_constant() || out[i].kind() == Kind::kProduct) {
      needs_refold = true;
    }
  }
  if (needs_refold) return product(std::move(out));
  if (out.empty()) return Expr(constant);
  if (out.size() == 1) return out.front();
  auto node = std::make_shared<Node>();
  node->kind = Kind::kProduct;
  node->children = std::move(out);
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::power(const Expr& base, uint32_t exponent) {
  if (exponent == 0) return Expr(Rational(1));
  if (exponent == 1) return base;
  switch (base.kind()) {
    case Kind::kConstant:
      return Expr(base.value().pow(exponent));
    case Kind::kPower:
      return power(base.children().front(), base.exponent() * exponent);
    case Kind::kProduct: {
      std::vector<Expr> f;
      for (const auto& c : base.children()) f.push_back(power(c, exponent));
      return product(std::move(f));
    }
    case Kind::kQuotient:
      return quotient(power(base.children()[0], exponent),
                      power(base.children()[1], exponent));
    default:
      break;
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::kPower;
  node->children = {base};
  node->exponent = exponent;
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::quotient(const Expr& numerator, const Expr& denominator) {
  if (denominator.is_constant()) {
    if (denominator.is_zero()) throw EvaluationError("division by zero");
    return product({Expr(Rational(1) / denominator.value()), numerator});
  }
  if (numerator.is_zero()) return Expr(Rational(0));
  if (numerator == denominator) return Expr(Rational(1));
  if (numerator.kind() == Kind::kQuotient) {
    return quotient(numerator.children()[0],
                    numerator.children()[1] * denominator);
  }
  if (denominator.kind() == Kind::kQuotient) {
    return quotient(numerator * denominator.children()[1],
                    denominator.children()[0]);
  }
  if (denominator.kind() == Kind::kProduct &&
      denominator.children().front().is_constant()) {
    auto [c, rest] = split_coefficient(denominator);
    return product({Expr(Rational(1) / c), quotient(numerator, rest)});
  }
  if (numerator.kind() == Kind::kProduct &&
      numerator.children().front().is_constant()) {
    auto [c, rest] = split_coefficient(numerator);
    return product({Expr(c), quotient(rest, denominator)});
  }
  if (numerator.is_constant() && !numerator.is_one()) {
    return product({numerator, quotient(Expr(Rational(1)), denominator)});
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::kQuotient;
  node->children = {numerator, denominator};
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::call(Primitive f, const Expr& argument) {
  if (argument.is_zero()) {
    if (f == Primitive::kExp || f == Primitive::kCos) return Expr(Rational(1));
    if (f == Primitive::kSin) return Expr(Rational(0));
  }
  if (f == Primitive::kLn && argument.is_one()) return Expr(Rational(0));
  auto node = std::make_shared<Node>();
  node->kind = Kind::kCall;
  node->function = f;
  node->children = {argument};
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr::Kind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const {
  return node_->kind == Kind::kConstant && node_->value.is_zero();
}
bool Expr::is_one() const {
  return node_->kind == Kind::kConstant && node_->value.is_one();
}
const Rational& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::span<const Expr> Expr::children() const { return node_->children; }
uint32_t Expr::exponent() const { return node_->exponent; }
Primitive Expr::function() const { return node_->function; }

Expr Expr::operator-() const { return product({Expr(Rational(-1)), *this}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, -b}); }

bool operator==(const Expr& a, const Expr& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (a.kind() != b.kind()) {
    return static_cast<int>(a.kind()) <=> static_cast<int>(b.kind());
  }
  switch (a.kind()) {
    case Expr::Kind::kConstant:
      return a.value() <=> b.value();
    case Expr::Kind::kVariable:
      return natural_compare(a.name(), b.name());
    case Expr::Kind::kPower:
      if (auto c = a.children()[0] <=> b.children()[0]; c != 0) return c;
      return a.exponent() <=> b.exponent();
    case Expr::Kind::kCall:
      if (a.function() != b.function()) {
        return static_cast<int>(a.function()) <=>
               static_cast<int>(b.function());
      }
      return a.children()[0] <=> b.children()[0];
    default: {
      const auto ca = a.children();
      const auto cb = b.children();
      const size_t n = std::min(ca.size(), cb.size());
      for (size_t i = 0; i < n; ++i) {
        if (auto c = ca[i] <=> cb[i]; c != 0) return c;
      }
      return ca.size() <=> cb.size();
    }
  }
}

Expr exp(const Expr& e) { return Expr::call(Primitive::kExp, e); }
Expr sin(const Expr& e) { return Expr::call(Primitive::kSin, e); }
Expr cos(const Expr& e) { return Expr::call(Primitive::kCos, e); }
Expr ln(const Expr& e) { return Expr::call(Primitive::kLn, e); }

// Printing ------------------------------------------------------------------

namespace {

void print(std::ostream& os, const Expr& e);

void print_factor(std::ostream& os, const Expr& f) {
  const auto k = f.kind();
  if (k == Expr::Kind::kSum || k == Expr::Kind::kQuotient) {
    os << "(";
    print(os, f);
    os << ")";
  } else {
    print(os, f);
  }
}

// Prints a product or constant with its sign dropped.
void print_magnitude(std::ostream& os, const Expr& e) {
  if (e.is_constant()) {
    os << e.value().abs().to_string();
    return;
  }
  if (e.kind() != Expr::Kind::kProduct) {
    print(os, e);
    return;
  }
  const auto f = e.children();
  size_t start = 0;
  bool first = true;
  if (f.front().is_constant()) {
    start = 1;
    const Rational c = f.front().value().abs();
    if (!c.is_one()) {
      os << c.to_string();
      first = false;
    }
  }
  for (size_t i = start; i < f.size(); ++i) {
    if (!first) os << "*";
    first = false;
    print_factor(os, f[i]);
  }
}

void print_signed(std::ostream& os, const Expr& e) {
  if (!is_negative_term(e)) {
    print_magnitude(os, e);
    return;
  }
  os << "-";
  // "-x^2" would parse as (-x)^2, so a bare leading power is parenthesized.
  if (e.kind() == Expr::Kind::kProduct) {
    const auto f = e.children();
    if (f.front().value().abs().is_one() && f[1].kind() == Expr::Kind::kPower) {
      os << "(";
      print_magnitude(os, e);
      os << ")";
      return;
    }
  }
  print_magnitude(os, e);
}

void print(std::ostream& os, const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      os << e.value().to_string();
      return;
    case Expr::Kind::kVariable:
      os << e.name();
      return;
    case Expr::Kind::kCall:
      os << primitive_name(e.function()) << "(";
      print(os, e.children()[0]);
      os << ")";
      return;
    case Expr::Kind::kPower: {
      const Expr& b = e.children()[0];
      if (b.kind() == Expr::Kind::kVariable || b.kind() == Expr::Kind::kCall) {
        print(os, b);
      } else {
        os << "(";
        print(os, b);
        os << ")";
      }
      os << "^" << e.exponent();
      return;
    }
    case Expr::Kind::kProduct:
      print_signed(os, e);
      return;
    case Expr::Kind::kSum: {
      const auto t = e.children();
      print_signed(os, t[0]);
      for (size_t i = 1; i < t.size(); ++i) {
        if (is_negative_term(t[i])) {
          os << " - ";
          print_magnitude(os, t[i]);
        } else {
          os << " + ";
          print_magnitude(os, t[i]);
        }
      }
      return;
    }
    case Expr::Kind::kQuotient: {
      const Expr& n = e.children()[0];
      const Expr& d = e.children()[1];
      if (n.kind() == Expr::Kind::kSum) {
        os << "(";
        print(os, n);
        os << ")";
      } else {
        print(os, n);
      }
      os << "/";
      const auto dk = d.kind();
      if (dk == Expr::Kind::kSum || dk == Expr::Kind::kProduct ||
          dk == Expr::Kind::kQuotient) {
        os << "(";
        print(os, d);
        os << ")";
      } else {
        print(os, d);
      }
      return;
    }
  }
}

}  // namespace

std::string Expr::to_string() const {
  std::ostringstream os;
  print(os, *this);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Expr& e) {
  return os << e.to_string();
}

// Calculus --------------------------------------------------------------------

Expr differentiate(const Expr& e, const std::string& var) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      return Expr();
    case Expr::Kind::kVariable:
      return e.name() == var ? Expr(1) : Expr();
    case Expr::Kind::kSum: {
      std::vector<Expr> terms;
      for (const auto& t : e.children()) terms.push_back(differentiate(t, var));
      return Expr::sum(std::move(terms));
    }
    case Expr::Kind::kProduct: {
      const auto f = e.children();
      std::vector<Expr> terms;
      for (size_t i = 0; i < f.size(); ++i) {
        Expr d = differentiate(f[i], var);
        if (d.is_zero()) continue;
        std::vector<Expr> factors{d};
        for (size_t j = 0; j < f.size(); ++j) {
          if (j != i) factors.push_back(f[j]);
        }
        terms.push_back(Expr::product(std::move(factors)));
      }
      return Expr::sum(std::move(terms));
    }
    case Expr::Kind::kPower: {
      const Expr& b = e.children()[0];
      const Expr db = differentiate(b, var);
      if (db.is_zero()) return Expr();
      return Expr::product({Expr(static_cast<int64_t>(e.exponent())),
                            Expr::power(b, e.exponent() - 1), db});
    }
    case Expr::Kind::kQuotient: {
      const Expr& n = e.children()[0];
      const Expr& d = e.children()[1];
      const Expr dn = differentiate(n, var);
      const Expr dd = differentiate(d, var);
      if (dd.is_zero()) return dn / d;
      return (dn * d - n * dd) / Expr::power(d, 2);
    }
    case Expr::Kind::kCall: {
      const Expr& u = e.children()[0];
      const Expr du = differentiate(u, var);
      if (du.is_zero()) return Expr();
      switch (e.function()) {
        case Primitive::kExp: return du * e;
        case Primitive::kSin: return du * cos(u);
        case Primitive::kCos: return -(du * sin(u));
        case Primitive::kLn: return du / u;
      }
    }
  }
  return Expr();
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& subs) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      return e;
    case Expr::Kind::kVariable: {
      const auto it = subs.find(e.name());
      return it == subs.end() ? e : it->second;
    }
    case Expr::Kind::kSum:
    case Expr::Kind::kProduct: {
      std::vector<Expr> c;
      for (const auto& x : e.children()) c.push_back(substitute(x, subs));
      return e.kind() == Expr::Kind::kSum ? Expr::sum(std::move(c))
                                          : Expr::product(std::move(c));
    }
    case Expr::Kind::kPower:
      return Expr::power(substitute(e.children()[0], subs), e.exponent());
    case Expr::Kind::kQuotient:
      return substitute(e.children()[0], subs) /
             substitute(e.children()[1], subs);
    case Expr::Kind::kCall:
      return Expr::call(e.function(), substitute(e.children()[0], subs));
  }
  return e;
}

namespace {
void collect_variables(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == Expr::Kind::kVariable) {
    out.insert(e.name());
    return;
  }
  for (const auto& c : e.children()) collect_variables(c, out);
}
}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

bool has_primitive(const Expr& e) {
  if (e.kind() == Expr::Kind::kCall) return true;
  for (const auto& c : e.children()) {
    if (has_primitive(c)) return true;
  }
  return false;
}

bool is_polynomial_expr(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
    case Expr::Kind::kVariable:
      return true;
    case Expr::Kind::kQuotient:
    case Expr::Kind::kCall:
      return false;
    default:
      for (const auto& c : e.children()) {
        if (!is_polynomial_expr(c)) return false;
      }
      return true;
  }
}

// Evaluation ------------------------------------------------------------------

double eval(const Expr& e, const std::map<std::string, double>& point) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      return e.value().to_double();
    case Expr::Kind::kVariable: {
      const auto it = point.find(e.name());
      if (it == point.end()) {
        throw EvaluationError("unassigned variable " + e.name());
      }
      return it->second;
    }
    case Expr::Kind::kSum: {
      double s = 0.0;
      for (const auto& c : e.children()) s += eval(c, point);
      return s;
    }
    case Expr::Kind::kProduct: {
      double p = 1.0;
      for (const auto& c : e.children()) p *= eval(c, point);
      return p;
    }
    case Expr::Kind::kPower:
      return std::pow(eval(e.children()[0], point), e.exponent());
    case Expr::Kind::kQuotient: {
      const double n = eval(e.children()[0], point);
      const double d = eval(e.children()[1], point);
      if (d == 0.0) throw EvaluationError("division by zero in " + e.to_string());
      return n / d;
    }
    case Expr::Kind::kCall: {
      const double u = eval(e.children()[0], point);
      switch (e.function()) {
        case Primitive::kExp: return std::exp(u);
        case Primitive::kSin: return std::sin(u);
        case Primitive::kCos: return std::cos(u);
        case Primitive::kLn:
          if (u <= 0.0) throw EvaluationError("ln of non-positive value");
          return std::log(u);
      }
    }
  }
  return 0.0;
}

namespace {
template <typename Instr, typename Op>
void compile_into(const Expr& e, const std::vector<std::string>& vars,
                  std::vector<Instr>& program) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      program.push_back({Op::kConst, 0, e.value().to_double()});
      return;
    case Expr::Kind::kVariable: {
      const auto it = std::find(vars.begin(), vars.end(), e.name());
      if (it == vars.end()) {
        throw EvaluationError("unassigned variable " + e.name());
      }
      program.push_back({Op::kVar, static_cast<uint32_t>(it - vars.begin()), 0.0});
      return;
    }
    case Expr::Kind::kSum:
    case Expr::Kind::kProduct:
      for (const auto& c : e.children()) compile_into<Instr, Op>(c, vars, program);
      program.push_back({e.kind() == Expr::Kind::kSum ? Op::kAdd : Op::kMul,
                         static_cast<uint32_t>(e.children().size()), 0.0});
      return;
    case Expr::Kind::kPower:
      compile_into<Instr, Op>(e.children()[0], vars, program);
      program.push_back({Op::kPow, e.exponent(), 0.0});
      return;
    case Expr::Kind::kQuotient:
      compile_into<Instr, Op>(e.children()[0], vars, program);
      compile_into<Instr, Op>(e.children()[1], vars, program);
      program.push_back({Op::kDiv, 2, 0.0});
      return;
    case Expr::Kind::kCall: {
      compile_into<Instr, Op>(e.children()[0], vars, program);
      Op op = Op::kExp;
      switch (e.function()) {
        case Primitive::kExp: op = Op::kExp; break;
        case Primitive::kSin: op = Op::kSin; break;
        case Primitive::kCos: op = Op::kCos; break;
        case Primitive::kLn: op = Op::kLn; break;
      }
      program.push_back({op, 1, 0.0});
      return;
    }
  }
}
}  // namespace

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& vars) {
  compile_into<Instr, Op>(e, vars, program_);
  stack_.reserve(program_.size());
}

double CompiledExpr::operator()(std::span<const double> values) const {
  auto& s = stack_;
  s.clear();
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::kConst: s.push_back(in.value); break;
      case Op::kVar: s.push_back(values[in.arg]); break;
      case Op::kAdd: {
        double acc = 0.0;
        const size_t base = s.size() - in.arg;
        for (size_t i = base; i < s.size(); ++i) acc += s[i];
        s.resize(base);
        s.push_back(acc);
        break;
      }
      case Op::kMul: {
        double acc = 1.0;
        const size_t base = s.size() - in.arg;
        for (size_t i = base; i < s.size(); ++i) acc *= s[i];
        s.resize(base);
        s.push_back(acc);
        break;
      }
      case Op::kPow: s.back() = std::pow(s.back(), in.arg); break;
      case Op::kDiv: {
        const double d = s.back();
        s.pop_back();
        if (d == 0.0) throw EvaluationError("division by zero");
        s.back() /= d;
        break;
      }
      case Op::kExp: s.back() = std::exp(s.back()); break;
      case Op::kSin: s.back() = std::sin(s.back()); break;
      case Op::kCos: s.back() = std::cos(s.back()); break;
      case Op::kLn:
        if (s.back() <= 0.0) throw EvaluationError("ln of non-positive value");
        s.back() = std::log(s.back());
        break;
    }
  }
  return s.back();
}

// Rational rewriting ------------------------------------------------------------

namespace {

std::optional<RatFn> rewrite(const Expr& e, const GeneratorMap& gens);

std::optional<RatFn> rewrite_call(const Expr& e, const GeneratorMap& gens) {
  if (const auto it = gens.find(e); it != gens.end()) {
    return RatFn(Poly::variable(it->second));
  }
  if (e.function() != Primitive::kExp) return std::nullopt;
  const auto arg = as_polynomial(e.children()[0]);
  if (!arg || arg->is_zero()) return std::nullopt;
  for (const auto& [key, name] : gens) {
    if (key.kind() != Expr::Kind::kCall || key.function() != Primitive::kExp) {
      continue;
    }
    const auto base = as_polynomial(key.children()[0]);
    if (!base || base->is_zero()) continue;
    const Rational k = arg->leading_coefficient() / base->leading_coefficient();
    if (!k.is_integer() || k.num() < 1) continue;
    if (!(*arg - *base * k).is_zero()) continue;
    return RatFn(Poly::variable(name).pow(static_cast<uint32_t>(k.num())));
  }
  return std::nullopt;
}

std::optional<RatFn> rewrite(const Expr& e, const GeneratorMap& gens) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      return RatFn::constant(e.value());
    case Expr::Kind::kVariable: {
      const auto it = gens.find(e);
      return RatFn(Poly::variable(it == gens.end() ? e.name() : it->second));
    }
    case Expr::Kind::kSum: {
      RatFn acc;
      for (const auto& c : e.children()) {
        auto r = rewrite(c, gens);
        if (!r) return std::nullopt;
        acc += *r;
      }
      return acc;
    }
    case Expr::Kind::kProduct: {
      RatFn acc = RatFn::constant(Rational(1));
      for (const auto& c : e.children()) {
        auto r = rewrite(c, gens);
        if (!r) return std::nullopt;
        acc *= *r;
      }
      return acc;
    }
    case Expr::Kind::kPower: {
      auto r = rewrite(e.children()[0], gens);
      if (!r) return std::nullopt;
      return r->pow(e.exponent());
    }
    case Expr::Kind::kQuotient: {
      auto n = rewrite(e.children()[0], gens);
      auto d = rewrite(e.children()[1], gens);
      if (!n || !d || d->is_zero()) return std::nullopt;
      return *n / *d;
    }
    case Expr::Kind::kCall:
      return rewrite_call(e, gens);
  }
  return std::nullopt;
}

}  // namespace

std::optional<RatFn> as_rational(const Expr& e, const GeneratorMap& generators) {
  return rewrite(e, generators);
}

std::optional<Poly> as_polynomial(const Expr& e) {
  if (has_primitive(e)) return std::nullopt;
  auto r = rewrite(e, {});
  if (!r || !r->is_polynomial()) return std::nullopt;
  return r->numerator();
}

Expr to_expr(const Poly& p) {
  std::vector<Expr> terms;
  for (const auto& [e, c] : p.terms()) {
    std::vector<Expr> f{Expr(c)};
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] > 0) f.push_back(Expr::power(Expr::variable(p.variables()[i]), e[i]));
    }
    terms.push_back(Expr::product(std::move(f)));
  }
  return Expr::sum(std::move(terms));
}

Expr to_expr(const RatFn& r) {
  if (r.is_polynomial()) return to_expr(r.numerator());
  return to_expr(r.numerator()) / to_expr(r.denominator());
}

}  // namespace phlift
