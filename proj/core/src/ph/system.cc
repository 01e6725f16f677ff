#include "phlift/ph/system.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "phlift/errors.h"

namespace phlift {

std::vector<Expr> PHSystem::gradient() const {
  std::vector<Expr> g;
  g.reserve(states.size());
  for (const auto& x : states) g.push_back(differentiate(hamiltonian, x));
  return g;
}

std::vector<Expr> PHSystem::all_expressions() const {
  std::vector<Expr> out = gradient();
  for (const auto& row : J) out.insert(out.end(), row.begin(), row.end());
  for (const auto& row : R) out.insert(out.end(), row.begin(), row.end());
  for (const auto& col : g) out.insert(out.end(), col.begin(), col.end());
  return out;
}

namespace {

void collect_calls(const Expr& e, GeneratorMap& atoms) {
  if (e.kind() == Expr::Kind::kCall) {
    if (!atoms.count(e)) atoms.emplace(e, "__atom" + std::to_string(atoms.size()));
    return;
  }
  for (const auto& c : e.children()) collect_calls(c, atoms);
}

std::string entry_name(const char* m, size_t i, size_t j) {
  return std::string(m) + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

}  // namespace

bool is_identically_zero(const Expr& e) {
  if (e.is_zero()) return true;
  GeneratorMap atoms;
  collect_calls(e, atoms);
  const auto r = as_rational(e, atoms);
  return r && r->is_zero();
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  os << "skew-symmetric J: " << (skew_symmetric ? "yes" : "no") << "\n";
  os << "symmetric R: " << (symmetric ? "yes" : "no") << "\n";
  os << "R positive semidefinite on " << psd_samples
     << " samples: " << (psd ? "yes" : "no") << " (worst eigenvalue "
     << worst_eigenvalue << ")\n";
  os << "rational Hamiltonian: " << (rational_hamiltonian ? "yes" : "no") << "\n";
  for (const auto& f : failures) os << "  " << f << "\n";
  return os.str();
}

ValidationReport validate(const PHSystem& sys, const ValidationOptions& options) {
  ValidationReport rep;
  const size_t n = sys.n();
  auto square = [n](const ExprMatrix& m) {
    if (m.size() != n) return false;
    for (const auto& row : m) {
      if (row.size() != n) return false;
    }
    return true;
  };
  if (!square(sys.J) || !square(sys.R) || sys.domain.bounds.size() != n) {
    rep.shapes = false;
    rep.failures.push_back("J, R and the domain box must be n x n / length n");
  }
  for (size_t i = 0; i < sys.g.size(); ++i) {
    if (sys.g[i].size() != n) {
      rep.shapes = false;
      rep.failures.push_back("input column " + std::to_string(i + 1) + " has wrong length");
    }
  }
  if (!rep.shapes) return rep;

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i; j < n; ++j) {
      if (!is_identically_zero(sys.J[i][j] + sys.J[j][i])) {
        rep.skew_symmetric = false;
        rep.failures.push_back(entry_name("J", i, j) + " + " + entry_name("J", j, i) +
                               " = " + (sys.J[i][j] + sys.J[j][i]).to_string());
      }
      if (j > i && !is_identically_zero(sys.R[i][j] - sys.R[j][i])) {
        rep.symmetric = false;
        rep.failures.push_back(entry_name("R", i, j) + " - " + entry_name("R", j, i) +
                               " = " + (sys.R[i][j] - sys.R[j][i]).to_string());
      }
    }
  }
  if (has_primitive(sys.hamiltonian) || !as_rational(sys.hamiltonian, {})) {
    rep.rational_hamiltonian = false;
    rep.failures.push_back("H is not rational in x: " + sys.hamiltonian.to_string());
  }

  std::vector<std::vector<CompiledExpr>> rc(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) rc[i].emplace_back(sys.R[i][j], sys.states);
  }
  const auto pts = latin_hypercube(sys.domain, options.psd_samples, options.seed);
  rep.worst_eigenvalue = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd m(n, n);
  for (const auto& x : pts) {
    try {
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) m(i, j) = rc[i][j](x);
      }
    } catch (const EvaluationError& err) {
      rep.psd = false;
      rep.failures.push_back(std::string("R not evaluable in the domain: ") + err.what());
      break;
    }
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const double lo = n == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                         sym, Eigen::EigenvaluesOnly)
                                         .eigenvalues()(0);
    rep.worst_eigenvalue = std::min(rep.worst_eigenvalue, lo);
    ++rep.psd_samples;
  }
  if (rep.psd_samples == 0) rep.worst_eigenvalue = 0.0;
  if (rep.worst_eigenvalue < -options.psd_tolerance) {
    rep.psd = false;
    rep.failures.push_back("R has a negative eigenvalue " +
                           std::to_string(rep.worst_eigenvalue));
  }
  return rep;
}

// Lifting ---------------------------------------------------------------------

LiftedPHSystem lift_ph(const PHSystem& sys, Immersion imm,
                       const ExtensionOptions& options) {
  const size_t n = sys.n();
  const size_t m = sys.m();
  const auto grad = sys.gradient();
  std::vector<RatFn> entries;
  entries.reserve(n + 2 * n * n + m * n);
  for (size_t i = 0; i < n; ++i) {
    entries.push_back(imm.rewrite(grad[i], "dH/d" + sys.states[i]));
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) entries.push_back(imm.rewrite(sys.J[i][j], entry_name("J", i, j)));
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) entries.push_back(imm.rewrite(sys.R[i][j], entry_name("R", i, j)));
  }
  for (size_t p = 0; p < m; ++p) {
    for (size_t i = 0; i < n; ++i) entries.push_back(imm.rewrite(sys.g[p][i], entry_name("g", i, p)));
  }
  const RatFn hbar = imm.rewrite(sys.hamiltonian, "H");

  const std::vector<Poly> polys = polynomial_extension(entries, imm, sys.domain, options);

  LiftedPHSystem out;
  out.vars = imm.extended_vars();
  out.n = n;
  const size_t N = out.vars.size();
  const size_t r = N - n;
  const Poly zero = Poly::constant(Rational(0), out.vars);
  out.hamiltonian = hbar.with_variables(out.vars);

  size_t at = 0;
  out.gradient.assign(N, zero);
  for (size_t i = 0; i < n; ++i) out.gradient[i] = polys[at++];
  out.Jbar.assign(n, std::vector<Poly>(n, zero));
  out.Rbar.assign(n, std::vector<Poly>(n, zero));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) out.Jbar[i][j] = polys[at++];
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) out.Rbar[i][j] = polys[at++];
  }
  out.xi_bar.assign(m, std::vector<Poly>(n, zero));
  for (size_t p = 0; p < m; ++p) {
    for (size_t i = 0; i < n; ++i) out.xi_bar[p][i] = polys[at++];
  }

  out.P.assign(r, std::vector<Poly>(n, zero));
  for (size_t k = 0; k < r; ++k) {
    for (size_t j = 0; j < n; ++j) {
      out.P[k][j] = imm.coords()[k].derivative_table[j].as_polynomial().with_variables(out.vars);
    }
  }
  out.Lambda.assign(r, std::vector<Poly>(n, zero));
  for (size_t k = 0; k < r; ++k) {
    for (size_t j = 0; j < n; ++j) {
      Poly s = zero;
      for (size_t l = 0; l < n; ++l) {
        if (out.P[k][l].is_zero()) continue;
        s += out.P[k][l] * (out.Rbar[l][j] - out.Jbar[l][j]);
      }
      out.Lambda[k][j] = s;
    }
  }
  out.Jscript.assign(N, std::vector<Poly>(N, zero));
  out.Rscript.assign(N, std::vector<Poly>(N, zero));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      out.Jscript[i][j] = out.Jbar[i][j];
      out.Rscript[i][j] = out.Rbar[i][j];
    }
  }
  for (size_t k = 0; k < r; ++k) {
    for (size_t j = 0; j < n; ++j) {
      out.Rscript[n + k][j] = out.Lambda[k][j];
      out.Rscript[j][n + k] = out.Lambda[k][j];
    }
  }
  out.ports.assign(m, std::vector<Poly>(N, zero));
  for (size_t p = 0; p < m; ++p) {
    for (size_t i = 0; i < n; ++i) out.ports[p][i] = out.xi_bar[p][i];
    for (size_t k = 0; k < r; ++k) {
      Poly s = zero;
      for (size_t l = 0; l < n; ++l) s += out.P[k][l] * out.xi_bar[p][l];
      out.ports[p][n + k] = s;
    }
  }
  out.immersion = std::move(imm);
  return out;
}

LiftedPHSystem lift(const PHSystem& sys, const ClosureOptions& closure,
                    const ExtensionOptions& extension) {
  const auto prims = collect_primitives(sys.all_expressions());
  Immersion imm = eliminate_redundancy(compute_closure(sys.states, prims, closure));
  return lift_ph(sys, std::move(imm), extension);
}

// Identities ------------------------------------------------------------------

RatFn expand_reciprocals(const RatFn& f, const Immersion& imm) {
  RatFn out = f;
  const auto& coords = imm.coords();
  for (size_t i = coords.size(); i-- > 0;) {
    if (!coords[i].is_reciprocal()) continue;
    const Poly& b = *coords[i].reciprocal_of;
    std::map<std::string, RatFn> subs{
        {coords[i].name, RatFn(Poly::constant(Rational(1)), b)}};
    out = out.compose(subs);
  }
  return out;
}

namespace {

SymbolicVerdict compare(const Poly& lifted, const Expr& original, const Immersion& imm,
                        const std::vector<std::string>& vars, const std::string& what) {
  SymbolicVerdict v;
  v.value = lifted;
  const RatFn rhs = imm.rewrite(original, what);
  const RatFn lhs = expand_reciprocals(RatFn(lifted), imm);
  v.difference = (lhs.numerator() * rhs.denominator() - rhs.numerator() * lhs.denominator())
                     .with_variables(merge_variables(vars, {}));
  v.ok = v.difference.is_zero();
  v.detail = v.ok ? what + " identity holds: " + to_expr(lifted).to_string()
                  : what + " identity fails; difference " + to_expr(v.difference).to_string();
  return v;
}

Expr quadratic_form(const std::vector<Expr>& a, const ExprMatrix& M) {
  std::vector<Expr> terms;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a.size(); ++j) {
      if (a[i].is_zero() || a[j].is_zero() || M[i][j].is_zero()) continue;
      terms.push_back(a[i] * M[i][j] * a[j]);
    }
  }
  return Expr::sum(std::move(terms));
}

}  // namespace

SymbolicVerdict dissipation_identity(const LiftedPHSystem& lifted, const PHSystem& orig) {
  const size_t N = lifted.dimension();
  Poly lhs = Poly::constant(Rational(0), lifted.vars);
  for (size_t i = 0; i < N; ++i) {
    if (lifted.gradient[i].is_zero()) continue;
    for (size_t j = 0; j < N; ++j) {
      if (lifted.Rscript[i][j].is_zero() || lifted.gradient[j].is_zero()) continue;
      lhs += lifted.gradient[i] * lifted.Rscript[i][j] * lifted.gradient[j];
    }
  }
  return compare(lhs, quadratic_form(orig.gradient(), orig.R), lifted.immersion,
                 lifted.vars, "dissipation");
}

std::vector<SymbolicVerdict> output_identity(const LiftedPHSystem& lifted,
                                             const PHSystem& orig) {
  std::vector<SymbolicVerdict> out;
  const auto grad = orig.gradient();
  for (size_t p = 0; p < lifted.m(); ++p) {
    Poly lhs = Poly::constant(Rational(0), lifted.vars);
    for (size_t i = 0; i < lifted.dimension(); ++i) {
      lhs += lifted.ports[p][i] * lifted.gradient[i];
    }
    std::vector<Expr> terms;
    for (size_t i = 0; i < orig.n(); ++i) terms.push_back(orig.g[p][i] * grad[i]);
    out.push_back(compare(lhs, Expr::sum(std::move(terms)), lifted.immersion, lifted.vars,
                          "output " + std::to_string(p + 1)));
  }
  return out;
}

StructureReport check_structure(const LiftedPHSystem& lifted) {
  StructureReport rep;
  const size_t N = lifted.dimension();
  rep.jscript_skew = true;
  rep.rscript_symmetric = true;
  for (size_t i = 0; i < N; ++i) {
    for (size_t j = 0; j < N; ++j) {
      if (!(lifted.Jscript[i][j] + lifted.Jscript[j][i]).is_zero()) rep.jscript_skew = false;
      if (!(lifted.Rscript[i][j] - lifted.Rscript[j][i]).is_zero()) rep.rscript_symmetric = false;
    }
  }
  rep.hamiltonian_base_only = true;
  for (const auto* p : {&lifted.hamiltonian.numerator(), &lifted.hamiltonian.denominator()}) {
    for (const auto& v : p->used_variables()) {
      const auto it = std::find(lifted.vars.begin(), lifted.vars.end(), v);
      if (it == lifted.vars.end() || static_cast<size_t>(it - lifted.vars.begin()) >= lifted.n) {
        rep.hamiltonian_base_only = false;
      }
    }
  }
  rep.all_polynomial = true;
  for (const auto& c : lifted.immersion.coords()) {
    for (const auto& t : c.derivative_table) {
      if (!t.is_polynomial()) rep.all_polynomial = false;
    }
  }
  return rep;
}

std::vector<std::vector<double>> evaluate_matrix(const PolyMatrix& m,
                                                 const std::vector<std::string>& vars,
                                                 const std::vector<double>& point) {
  std::vector<std::vector<double>> out(m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    for (const auto& p : m[i]) {
      out[i].push_back(p.with_variables(vars).evaluate(std::span<const double>(point)));
    }
  }
  return out;
}

std::vector<double> eigen_spectrum_at(const LiftedPHSystem& lifted,
                                      const std::vector<double>& point) {
  if (point.size() != lifted.dimension()) {
    throw std::invalid_argument("point dimension does not match the lifted state");
  }
  const size_t N = lifted.dimension();
  const auto vals = evaluate_matrix(lifted.Rscript, lifted.vars, point);
  Eigen::MatrixXd m(N, N);
  for (size_t i = 0; i < N; ++i) {
    for (size_t j = 0; j < N; ++j) m(i, j) = vals[i][j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + N);
  std::sort(out.begin(), out.end());
  return out;
}

// Numeric audit ---------------------------------------------------------------

namespace {

struct AuditKernel {
  const LiftedPHSystem& lifted;
  const PHSystem& orig;
  std::vector<PolyD> grad;
  std::vector<std::vector<PolyD>> rs;
  std::vector<std::vector<PolyD>> ports;
  PolyD hbar_num, hbar_den;
  CompiledExpr h;
  std::vector<CompiledExpr> dh;
  std::vector<std::vector<CompiledExpr>> R;
  std::vector<std::vector<CompiledExpr>> g;

  AuditKernel(const LiftedPHSystem& l, const PHSystem& o) : lifted(l), orig(o) {
    auto d = [&](const Poly& p) { return to_double_poly(p.with_variables(l.vars)); };
    for (const auto& p : l.gradient) grad.push_back(d(p));
    for (const auto& row : l.Rscript) {
      rs.emplace_back();
      for (const auto& p : row) rs.back().push_back(d(p));
    }
    for (const auto& col : l.ports) {
      ports.emplace_back();
      for (const auto& p : col) ports.back().push_back(d(p));
    }
    hbar_num = d(l.hamiltonian.numerator());
    hbar_den = d(l.hamiltonian.denominator());
    h = CompiledExpr(o.hamiltonian, o.states);
    for (const auto& e : o.gradient()) dh.emplace_back(e, o.states);
    for (const auto& row : o.R) {
      R.emplace_back();
      for (const auto& e : row) R.back().emplace_back(e, o.states);
    }
    for (const auto& col : o.g) {
      g.emplace_back();
      for (const auto& e : col) g.back().emplace_back(e, o.states);
    }
  }

  void run(const std::vector<double>& x, NumericAudit& acc) {
    const auto xb = lifted.immersion.evaluate(x);
    const std::span<const double> s(xb);
    const size_t N = xb.size(), n = x.size();
    std::vector<double> gb(N);
    for (size_t i = 0; i < N; ++i) gb[i] = grad[i].evaluate(s);
    double lifted_diss = 0.0;
    for (size_t i = 0; i < N; ++i) {
      for (size_t j = 0; j < N; ++j) {
        if (gb[i] == 0.0 || gb[j] == 0.0 || rs[i][j].is_zero()) continue;
        lifted_diss += gb[i] * rs[i][j].evaluate(s) * gb[j];
      }
    }
    std::vector<double> gx(n);
    for (size_t i = 0; i < n; ++i) gx[i] = dh[i](x);
    double diss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) diss += gx[i] * R[i][j](x) * gx[j];
    }
    acc.max_dissipation_error = std::max(
        acc.max_dissipation_error, std::abs(lifted_diss - diss) / (1.0 + std::abs(diss)));
    for (size_t p = 0; p < ports.size(); ++p) {
      double yl = 0.0, y = 0.0;
      for (size_t i = 0; i < N; ++i) yl += ports[p][i].evaluate(s) * gb[i];
      for (size_t i = 0; i < n; ++i) y += g[p][i](x) * gx[i];
      acc.max_output_error =
          std::max(acc.max_output_error, std::abs(yl - y) / (1.0 + std::abs(y)));
    }
    const double hl = hbar_num.evaluate(s) / hbar_den.evaluate(s);
    const double ho = h(x);
    acc.max_hamiltonian_error =
        std::max(acc.max_hamiltonian_error, std::abs(hl - ho) / (1.0 + std::abs(ho)));
    ++acc.samples;
  }
};

}  // namespace

NumericAudit numeric_identity_audit(const LiftedPHSystem& lifted, const PHSystem& orig,
                                    size_t samples, uint64_t seed, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, std::max<size_t>(samples, 1)));
  auto worker = [&](size_t begin, size_t end) {
    AuditKernel k(lifted, orig);
    NumericAudit acc;
    std::vector<double> x(orig.n());
    for (size_t i = begin; i < end; ++i) {
      // Each sample has its own generator so results do not depend on the
      // thread split.
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
      for (size_t d = 0; d < x.size(); ++d) {
        const auto [lo, hi] = orig.domain.bounds[d];
        x[d] = std::uniform_real_distribution<double>(lo, hi)(rng);
      }
      k.run(x, acc);
    }
    return acc;
  };
  std::vector<std::future<NumericAudit>> parts;
  const size_t chunk = (samples + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const size_t b = t * chunk, e = std::min(samples, b + chunk);
    if (b >= e) break;
    parts.push_back(std::async(std::launch::async, worker, b, e));
  }
  NumericAudit total;
  for (auto& f : parts) {
    const NumericAudit a = f.get();
    total.samples += a.samples;
    total.max_dissipation_error = std::max(total.max_dissipation_error, a.max_dissipation_error);
    total.max_output_error = std::max(total.max_output_error, a.max_output_error);
    total.max_hamiltonian_error = std::max(total.max_hamiltonian_error, a.max_hamiltonian_error);
  }
  return total;
}

}  // namespace phlift
