#include "phlift/ph/lifted_io.h"

#include <sstream>

#include "phlift/errors.h"
#include "phlift/expr/parser.h"

namespace phlift {

LiftedFile to_lifted_file(const LiftedPHSystem& lifted, const std::string& manifest_ref) {
  LiftedFile f;
  f.states = lifted.immersion.original_vars();
  f.vars = lifted.vars;
  for (size_t k = 0; k < lifted.dimension(); ++k) {
    f.definitions.push_back(lifted.immersion.coordinate_expr(k));
  }
  f.hamiltonian = lifted.hamiltonian;
  f.gradient = lifted.gradient;
  f.Jscript = lifted.Jscript;
  f.Rscript = lifted.Rscript;
  f.ports = lifted.ports;
  f.manifest = manifest_ref;
  return f;
}

namespace {

void write_matrix(std::ostream& os, const PolyMatrix& m) {
  for (size_t i = 0; i < m.size(); ++i) {
    for (size_t j = 0; j < m[i].size(); ++j) {
      if (m[i][j].is_zero()) continue;
      os << i + 1 << " " << j + 1 << " " << to_expr(m[i][j]) << "\n";
    }
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string lifted_to_string(const LiftedFile& f) {
  std::ostringstream os;
  os << "[states]\n";
  for (size_t i = 0; i < f.states.size(); ++i) os << (i ? " " : "") << f.states[i];
  os << "\n[variables]\n";
  for (size_t k = 0; k < f.vars.size(); ++k) {
    os << f.vars[k] << " = " << f.definitions[k] << "\n";
  }
  os << "[hamiltonian]\n" << to_expr(f.hamiltonian) << "\n";
  os << "[gradient]\n";
  for (size_t k = 0; k < f.gradient.size(); ++k) {
    if (!f.gradient[k].is_zero()) os << k + 1 << " " << to_expr(f.gradient[k]) << "\n";
  }
  os << "[Jscript]\n";
  write_matrix(os, f.Jscript);
  os << "[Rscript]\n";
  write_matrix(os, f.Rscript);
  os << "[ports]\ncount " << f.ports.size() << "\n";
  for (size_t p = 0; p < f.ports.size(); ++p) {
    for (size_t k = 0; k < f.ports[p].size(); ++k) {
      if (!f.ports[p][k].is_zero()) {
        os << p + 1 << " " << k + 1 << " " << to_expr(f.ports[p][k]) << "\n";
      }
    }
  }
  os << "[manifest]\n" << f.manifest << "\n";
  return os.str();
}

LiftedFile lifted_from_string(const std::string& text) {
  LiftedFile f;
  std::istringstream is(text);
  std::string line, section;
  size_t offset = 0;
  bool have_count = false;
  auto poly_of = [&](const std::string& s, size_t at) {
    const auto r = as_rational(parse(s, f.vars), {});
    if (!r || !r->is_polynomial()) throw ParseError("expected a polynomial", at);
    return r->numerator().with_variables(f.vars);
  };
  auto zero_matrix = [&]() {
    const size_t N = f.vars.size();
    return PolyMatrix(N, std::vector<Poly>(N, Poly::constant(Rational(0), f.vars)));
  };
  auto index = [&](std::istringstream& ls, size_t bound, size_t at) {
    size_t k = 0;
    if (!(ls >> k) || k == 0 || k > bound) throw ParseError("bad index", at);
    return k - 1;
  };
  auto rest = [](std::istringstream& ls) {
    std::string r;
    std::getline(ls, r);
    return trim(r);
  };
  while (std::getline(is, line)) {
    const size_t at = offset;
    offset += line.size() + 1;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      if (section == "hamiltonian" || section == "gradient" || section == "Jscript") {
        if (f.gradient.empty()) {
          f.gradient.assign(f.vars.size(), Poly::constant(Rational(0), f.vars));
          f.Jscript = zero_matrix();
          f.Rscript = zero_matrix();
        }
      }
      continue;
    }
    std::istringstream ls(t);
    if (section == "states") {
      std::string v;
      while (ls >> v) f.states.push_back(v);
    } else if (section == "variables") {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected '='", at);
      f.vars.push_back(trim(t.substr(0, eq)));
      f.definitions.push_back(parse(trim(t.substr(eq + 1)), f.states));
    } else if (section == "hamiltonian") {
      const auto r = as_rational(parse(t, f.vars), {});
      if (!r) throw ParseError("Hamiltonian is not rational", at);
      f.hamiltonian = r->with_variables(f.vars);
    } else if (section == "gradient") {
      const size_t k = index(ls, f.vars.size(), at);
      f.gradient[k] = poly_of(rest(ls), at);
    } else if (section == "Jscript" || section == "Rscript") {
      const size_t i = index(ls, f.vars.size(), at);
      const size_t j = index(ls, f.vars.size(), at);
      (section == "Jscript" ? f.Jscript : f.Rscript)[i][j] = poly_of(rest(ls), at);
    } else if (section == "ports") {
      if (!have_count) {
        std::string word;
        size_t m = 0;
        if (!(ls >> word >> m) || word != "count") throw ParseError("expected 'count m'", at);
        f.ports.assign(m, std::vector<Poly>(f.vars.size(), Poly::constant(Rational(0), f.vars)));
        have_count = true;
        continue;
      }
      const size_t p = index(ls, f.ports.size(), at);
      const size_t k = index(ls, f.vars.size(), at);
      f.ports[p][k] = poly_of(rest(ls), at);
    } else if (section == "manifest") {
      f.manifest = t;
    } else {
      throw ParseError("line outside a known section", at);
    }
  }
  if (f.Jscript.empty()) {
    f.gradient.assign(f.vars.size(), Poly::constant(Rational(0), f.vars));
    f.Jscript = zero_matrix();
    f.Rscript = zero_matrix();
  }
  return f;
}

}  // namespace phlift
