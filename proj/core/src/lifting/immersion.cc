#include "phlift/lifting/immersion.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "phlift/errors.h"
#include "phlift/expr/parser.h"

namespace phlift {

Immersion::Immersion(std::vector<std::string> original_vars)
    : original_(std::move(original_vars)) {}

std::string Immersion::extended_name(size_t index) {
  return "xbar" + std::to_string(index + 1);
}

std::vector<std::string> Immersion::extended_vars() const {
  std::vector<std::string> out;
  out.reserve(dimension());
  for (size_t k = 0; k < dimension(); ++k) out.push_back(extended_name(k));
  return out;
}

GeneratorMap Immersion::generators() const {
  GeneratorMap g;
  for (size_t i = 0; i < original_.size(); ++i) {
    g.emplace(Expr::variable(original_[i]), extended_name(i));
  }
  for (const auto& c : coords_) {
    if (!c.is_reciprocal()) g.emplace(c.defining_expr, c.name);
  }
  return g;
}

RatFn Immersion::rewrite(const Expr& e, const std::string& what) const {
  auto r = as_rational(e, generators());
  if (!r) {
    throw RewriteFailure("cannot rewrite " + what + " = " + e.to_string() +
                         " in the lifted coordinates");
  }
  return *r;
}

std::vector<std::vector<RatFn>> Immersion::jacobian_P() const {
  std::vector<std::vector<RatFn>> p;
  p.reserve(coords_.size());
  for (const auto& c : coords_) p.push_back(c.derivative_table);
  return p;
}

RatFn Immersion::p_bar(size_t k, size_t j) const {
  if (k < original_.size()) return RatFn::constant(Rational(k == j ? 1 : 0));
  return coords_[k - original_.size()].derivative_table.at(j);
}

Expr Immersion::coordinate_expr(size_t k) const {
  if (k < original_.size()) return Expr::variable(original_[k]);
  return coords_.at(k - original_.size()).defining_expr;
}

std::vector<double> Immersion::evaluate(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  out.reserve(dimension());
  for (const auto& c : coords_) {
    out.push_back(CompiledExpr(c.defining_expr, original_)(x));
  }
  return out;
}

namespace {

RatFn reciprocal_table_entry(const Immersion& imm, const Poly& b,
                             const std::string& w, size_t j) {
  RatFn sum;
  const auto vars = imm.extended_vars();
  for (size_t k = 0; k < vars.size(); ++k) {
    if (!b.find_index(vars[k])) continue;
    const Poly db = b.derivative(vars[k]);
    if (db.is_zero()) continue;
    sum += RatFn(db) * imm.p_bar(k, j);
  }
  return -(sum * RatFn(Poly::variable(w).pow(2)));
}

}  // namespace

void Immersion::rebuild_tables() {
  for (size_t i = 0; i < coords_.size(); ++i) {
    auto& c = coords_[i];
    if (c.is_reciprocal()) continue;
    c.derivative_table.clear();
    for (const auto& x : original_) {
      c.derivative_table.push_back(
          rewrite(differentiate(c.defining_expr, x), "d" + c.name + "/d" + x));
    }
  }
  for (size_t i = 0; i < coords_.size(); ++i) {
    auto& c = coords_[i];
    if (!c.is_reciprocal()) continue;
    c.derivative_table.clear();
    for (size_t j = 0; j < original_.size(); ++j) {
      c.derivative_table.push_back(
          reciprocal_table_entry(*this, *c.reciprocal_of, c.name, j));
    }
  }
}

// Primitive collection --------------------------------------------------------

namespace {

void collect_into(const Expr& e, std::vector<Expr>& out) {
  if (e.kind() == Expr::Kind::kCall) {
    const Expr& arg = e.children()[0];
    if (!is_polynomial_expr(arg) && !as_polynomial(arg)) {
      throw UnsupportedFunction(std::string(primitive_name(e.function())) +
                                " of a non-polynomial argument: " + e.to_string());
    }
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
    return;
  }
  for (const auto& c : e.children()) collect_into(c, out);
}

std::optional<Expr> trig_partner(const Expr& p) {
  if (p.kind() != Expr::Kind::kCall) return std::nullopt;
  if (p.function() == Primitive::kSin) return cos(p.children()[0]);
  if (p.function() == Primitive::kCos) return sin(p.children()[0]);
  return std::nullopt;
}

}  // namespace

std::vector<Expr> collect_primitives(const std::vector<Expr>& exprs) {
  std::vector<Expr> out;
  for (const auto& e : exprs) collect_into(e, out);
  return out;
}

// Closure ---------------------------------------------------------------------

Immersion compute_closure(const std::vector<std::string>& original_vars,
                          const std::vector<Expr>& primitives,
                          const ClosureOptions& options) {
  Immersion imm(original_vars);
  auto has = [&](const Expr& p) {
    for (const auto& c : imm.coords()) {
      if (c.defining_expr == p) return true;
    }
    return false;
  };
  auto add = [&](const Expr& p) {
    auto push = [&](const Expr& q) {
      if (has(q)) return;
      if (imm.coords().size() >= options.max_coordinates) {
        throw ClosureDiverged("closure exceeded " +
                              std::to_string(options.max_coordinates) +
                              " coordinates");
      }
      collect_primitives({q});  // argument check
      imm.append(LiftCoordinate{Immersion::extended_name(imm.dimension()), q, {}, {}});
    };
    push(p);
    if (auto partner = trig_partner(p)) push(*partner);
  };
  for (const auto& p : primitives) add(p);

  for (size_t i = 0; i < imm.coords().size(); ++i) {
    for (const auto& x : original_vars) {
      const Expr d = differentiate(imm.coords()[i].defining_expr, x);
      while (!as_rational(d, imm.generators())) {
        const size_t before = imm.coords().size();
        for (const auto& p : collect_primitives({d})) add(p);
        if (imm.coords().size() == before) {
          throw ClosureDiverged("derivative " + d.to_string() +
                                " is not rational in the generators");
        }
      }
    }
  }
  imm.rebuild_tables();
  return imm;
}

Immersion immersion_from_coordinates(const std::vector<std::string>& original_vars,
                                     const std::vector<Expr>& coordinates) {
  Immersion imm(original_vars);
  for (const auto& c : coordinates) {
    imm.append(LiftCoordinate{Immersion::extended_name(imm.dimension()), c, {}, {}});
  }
  for (auto& c : imm.mutable_coords()) {
    for (const auto& x : original_vars) {
      auto r = as_rational(differentiate(c.defining_expr, x), imm.generators());
      c.derivative_table.push_back(r ? *r : RatFn());
    }
  }
  return imm;
}

// Redundancy ------------------------------------------------------------------

namespace {

// Returns nu when c == beta * o^nu for some rational beta and nu >= 1.
std::optional<uint32_t> power_relation(const Expr& c, const Expr& o) {
  const std::string g = "__generator";
  GeneratorMap m{{o, g}};
  auto r = as_rational(c, m);
  if (!r || !r->is_polynomial()) return std::nullopt;
  const Poly& p = r->numerator();
  if (p.num_terms() != 1) return std::nullopt;
  const auto used = p.used_variables();
  if (used.size() != 1 || used.front() != g) return std::nullopt;
  const uint32_t nu = p.degree_in(g);
  if (nu == 0) return std::nullopt;
  return nu;
}

}  // namespace

Immersion eliminate_redundancy(const Immersion& imm) {
  const auto& coords = imm.coords();
  std::vector<bool> drop(coords.size(), false);
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].is_reciprocal()) continue;
    const Expr& c = coords[i].defining_expr;
    if (!has_primitive(c) && as_polynomial(c)) {
      drop[i] = true;
      continue;
    }
    for (size_t j = 0; j < coords.size() && !drop[i]; ++j) {
      if (j == i || coords[j].is_reciprocal()) continue;
      const auto nu = power_relation(c, coords[j].defining_expr);
      if (!nu) continue;
      if (*nu >= 2 || j < i) drop[i] = true;
    }
  }
  Immersion out(imm.original_vars());
  for (size_t i = 0; i < coords.size(); ++i) {
    if (drop[i]) continue;
    LiftCoordinate c = coords[i];
    c.name = Immersion::extended_name(out.dimension());
    out.append(std::move(c));
  }
  out.rebuild_tables();
  return out;
}

// Polynomial extension --------------------------------------------------------

std::vector<std::vector<double>> latin_hypercube(const DomainBox& box,
                                                 size_t samples, uint64_t seed) {
  const size_t n = box.bounds.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts(samples, std::vector<double>(n));
  std::vector<size_t> perm(samples);
  for (size_t d = 0; d < n; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto [lo, hi] = box.bounds[d];
    for (size_t s = 0; s < samples; ++s) {
      const double t = (static_cast<double>(perm[s]) + unit(rng)) /
                       static_cast<double>(samples);
      pts[s][d] = lo + (hi - lo) * t;
    }
  }
  return pts;
}

namespace {

// Splits b = scale * p with p primitive over the integers and positive
// leading coefficient.
std::pair<Rational, Poly> primitive_part(const Poly& b) {
  int64_t l = 1;
  for (const auto& [e, c] : b.terms()) {
    l = (Rational(l) / Rational(gcd64(l, c.den())) * Rational(c.den())).num();
  }
  int64_t g = 0;
  for (const auto& [e, c] : b.terms()) g = gcd64(g, (c * Rational(l)).num());
  Rational s = Rational(l) / Rational(g);
  if (b.leading_coefficient().sign() < 0) s = -s;
  return {Rational(1) / s, b * s};
}

class Extender {
 public:
  Extender(Immersion& imm, const DomainBox& box, const ExtensionOptions& opt)
      : imm_(imm), box_(box), opt_(opt) {}

  Poly to_poly(const RatFn& f) {
    if (f.is_polynomial()) return f.numerator();
    Poly d = f.denominator();
    Poly result = f.numerator();
    while (!d.is_constant()) {
      bool progress = false;
      for (const auto& entry : imm_.registry().entries) {
        while (!d.is_constant()) {
          auto q = d.divide_exact(entry.denominator);
          if (!q) break;
          d = *q;
          result = result * Poly::variable(entry.name);
          progress = true;
        }
      }
      if (!progress) register_denominator(d);
    }
    return result * (Rational(1) / d.constant_term());
  }

  void register_denominator(const Poly& b_raw) {
    if (imm_.registry().entries.size() >= opt_.max_reciprocals) {
      throw ClosureDiverged("polynomial extension exceeded " +
                            std::to_string(opt_.max_reciprocals) +
                            " reciprocal coordinates");
    }
    const Poly b = primitive_part(b_raw).second;
    check_nonvanishing(b);
    const std::string name = Immersion::extended_name(imm_.dimension());
    const auto vars = imm_.extended_vars();
    RegistryEntry entry{b, name, {}};
    const Poly w2 = Poly::variable(name).pow(2);
    for (const auto& v : vars) entry.derivative_table.push_back(-(b.derivative(v) * w2));
    std::map<std::string, Expr> subs;
    for (size_t k = 0; k < vars.size(); ++k) subs.emplace(vars[k], imm_.coordinate_expr(k));
    const Expr def = Expr(1) / substitute(to_expr(b), subs);
    imm_.append(LiftCoordinate{name, def, {}, b});
    imm_.mutable_registry().entries.push_back(std::move(entry));
  }

  void check_nonvanishing(const Poly& b) {
    if (samples_.empty()) {
      samples_ = latin_hypercube(box_, opt_.samples, opt_.seed);
    }
    const Poly bb = b.with_variables(imm_.extended_vars());
    int sign = 0;
    for (const auto& x : samples_) {
      const auto xbar = imm_.evaluate(x);
      const double v = bb.evaluate(std::span<const double>(xbar));
      const int s = (v > 1e-12) - (v < -1e-12);
      if (s == 0 || !std::isfinite(v) || (sign != 0 && s != sign)) {
        std::ostringstream os;
        os << "denominator " << b.to_string() << " vanishes in the domain near x = (";
        for (size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << ")";
        throw DenominatorVanishes(os.str());
      }
      sign = s;
    }
  }

  void close_tables() {
    const size_t n = imm_.num_original();
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < imm_.coords().size(); ++i) {
        if (imm_.coords()[i].is_reciprocal() &&
            imm_.coords()[i].derivative_table.empty()) {
          auto& c = imm_.mutable_coords()[i];
          const Poly b = *c.reciprocal_of;
          const std::string w = c.name;
          std::vector<RatFn> table;
          for (size_t j = 0; j < n; ++j) {
            table.push_back(reciprocal_table_entry(imm_, b, w, j));
          }
          imm_.mutable_coords()[i].derivative_table = std::move(table);
          changed = true;
        }
        for (size_t j = 0; j < n; ++j) {
          const RatFn t = imm_.coords()[i].derivative_table[j];
          if (t.is_polynomial()) continue;
          const Poly p = to_poly(t);
          imm_.mutable_coords()[i].derivative_table[j] = RatFn(p);
          changed = true;
        }
      }
    }
  }

 private:
  Immersion& imm_;
  const DomainBox& box_;
  const ExtensionOptions& opt_;
  std::vector<std::vector<double>> samples_;
};

}  // namespace

std::vector<Poly> polynomial_extension(const std::vector<RatFn>& entries,
                                       Immersion& imm, const DomainBox& box,
                                       const ExtensionOptions& options) {
  if (box.bounds.size() != imm.num_original()) {
    throw std::invalid_argument("domain box dimension does not match the state");
  }
  Extender ext(imm, box, options);
  ext.close_tables();
  // Register low-degree denominators first so that powers of them are
  // recognized rather than registered separately.
  std::vector<Poly> dens;
  for (const auto& e : entries) {
    if (!e.is_polynomial()) dens.push_back(e.denominator());
  }
  std::stable_sort(dens.begin(), dens.end(), [](const Poly& a, const Poly& b) {
    return a.total_degree() < b.total_degree();
  });
  for (const auto& d : dens) ext.to_poly(RatFn(Poly::constant(Rational(1)), d));
  std::vector<Poly> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(ext.to_poly(e));
  ext.close_tables();
  const auto vars = imm.extended_vars();
  for (auto& p : out) p = p.with_variables(vars);
  return out;
}

// Manifest --------------------------------------------------------------------

std::string manifest_to_string(const Immersion& imm) {
  std::ostringstream os;
  os << "original";
  for (const auto& v : imm.original_vars()) os << " " << v;
  os << "\n";
  for (const auto& c : imm.coords()) {
    if (c.is_reciprocal()) {
      os << "reciprocal " << c.name << " := 1/(" << to_expr(*c.reciprocal_of) << ")\n";
    } else {
      os << "coordinate " << c.name << " := " << c.defining_expr << "\n";
    }
    for (size_t j = 0; j < c.derivative_table.size(); ++j) {
      os << "  d/d" << imm.original_vars()[j] << " = "
         << to_expr(c.derivative_table[j]) << "\n";
    }
  }
  return os.str();
}

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

Immersion manifest_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> original;
  if (!std::getline(is, line) || line.rfind("original", 0) != 0) {
    throw ParseError("manifest must start with 'original'", 0);
  }
  {
    std::istringstream ls(line.substr(8));
    std::string v;
    while (ls >> v) original.push_back(v);
  }
  Immersion imm(original);
  size_t offset = line.size() + 1;
  std::vector<std::pair<size_t, std::string>> lines;
  size_t total = original.size();
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') lines.emplace_back(offset, t);
    offset += line.size() + 1;
    if (t.rfind("coordinate ", 0) == 0 || t.rfind("reciprocal ", 0) == 0) ++total;
  }
  std::vector<std::string> vars;
  for (size_t k = 0; k < total; ++k) vars.push_back(Immersion::extended_name(k));
  for (const auto& [here, t] : lines) {
    if (t.rfind("coordinate ", 0) == 0 || t.rfind("reciprocal ", 0) == 0) {
      const bool recip = t[0] == 'r';
      const auto def = t.find(":=");
      if (def == std::string::npos) throw ParseError("expected ':='", here);
      const std::string name = trim(t.substr(11, def - 11));
      if (name != Immersion::extended_name(imm.dimension())) {
        throw ParseError("coordinate names must be consecutive, got " + name, here);
      }
      const std::string rhs = trim(t.substr(def + 2));
      if (recip) {
        if (rhs.rfind("1/(", 0) != 0 || rhs.back() != ')') {
          throw ParseError("reciprocal must read 1/(b)", here);
        }
        const Expr be = parse(rhs.substr(3, rhs.size() - 4), vars);
        auto b = as_polynomial(be);
        if (!b) throw ParseError("reciprocal denominator is not polynomial", here);
        std::map<std::string, Expr> subs;
        for (size_t k = 0; k < imm.dimension(); ++k) {
          subs.emplace(Immersion::extended_name(k), imm.coordinate_expr(k));
        }
        const Expr defining = Expr(1) / substitute(be, subs);
        RegistryEntry entry{*b, name, {}};
        const Poly w2 = Poly::variable(name).pow(2);
        for (const auto& v : imm.extended_vars()) {
          entry.derivative_table.push_back(-(b->derivative(v) * w2));
        }
        imm.append(LiftCoordinate{name, defining, {}, *b});
        imm.mutable_registry().entries.push_back(std::move(entry));
      } else {
        imm.append(LiftCoordinate{name, parse(rhs, original), {}, {}});
      }
      continue;
    }
    if (t.rfind("d/d", 0) == 0) {
      if (imm.coords().empty()) throw ParseError("table entry before coordinate", here);
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected '='", here);
      auto r = as_rational(parse(trim(t.substr(eq + 1)), vars), {});
      if (!r) throw ParseError("table entry is not rational", here);
      imm.mutable_coords().back().derivative_table.push_back(*r);
      continue;
    }
    throw ParseError("unrecognized manifest line", here);
  }
  for (const auto& c : imm.coords()) {
    if (c.derivative_table.size() != original.size()) {
      throw ParseError("incomplete derivative table for " + c.name, 0);
    }
  }
  return imm;
}

}  // namespace phlift
