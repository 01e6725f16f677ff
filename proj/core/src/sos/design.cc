#include "phlift/sos/design.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "phlift/errors.h"

namespace phlift {

namespace {

std::vector<std::string> numbered(const std::string& prefix, size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

std::string monomial_name(const Exponents& e, const std::vector<std::string>& vars) {
  std::string s;
  for (size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += vars[i];
    if (e[i] > 1) s += "^" + std::to_string(e[i]);
  }
  return s.empty() ? "1" : s;
}

/// Exponents over `nvars` variables with total degree <= d, grlex order.
std::vector<Exponents> monomials_up_to(size_t nvars, uint32_t d) {
  std::vector<Exponents> out;
  Exponents cur(nvars, 0);
  auto rec = [&](auto&& self, size_t var, uint32_t left) -> void {
    if (var == nvars) {
      out.push_back(cur);
      return;
    }
    for (uint32_t k = 0; k <= left; ++k) {
      cur[var] = k;
      self(self, var + 1, left - k);
    }
    cur[var] = 0;
  };
  rec(rec, 0, d);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

double magnitude(const Rational& v) { return std::abs(v.to_double()); }
double magnitude(double v) { return std::abs(v); }

template <typename C>
bool negligible(const C& v, double tol) {
  if constexpr (std::is_same_v<C, double>) {
    return std::abs(v) <= tol;
  } else {
    (void)tol;
    return v.is_zero();
  }
}

template <typename C>
using PolyOf = Polynomial<C>;

/// sum_k row_k sum_j M_kj v_j.
template <typename C>
PolyOf<C> weighted(const std::vector<PolyOf<C>>& row, const std::vector<std::vector<PolyOf<C>>>& M,
                   const std::vector<PolyOf<C>>& v, const std::vector<std::string>& vars) {
  PolyOf<C> out(vars);
  for (size_t k = 0; k < row.size(); ++k) {
    if (row[k].is_zero()) continue;
    PolyOf<C> inner(vars);
    for (size_t j = 0; j < v.size(); ++j) {
      if (!M[k][j].is_zero() && !v[j].is_zero()) inner += M[k][j] * v[j];
    }
    out += row[k] * inner;
  }
  return out.with_variables(vars);
}

template <typename C>
struct LinearSystemSolution {
  /// For each reduced row: pivot column, entries (pivot entry 1) and rhs.
  std::vector<size_t> pivot;
  std::vector<std::vector<C>> rows;
  std::vector<C> rhs;
  std::vector<bool> is_pivot;
};

/// Gauss-Jordan elimination with largest-magnitude pivoting. Throws
/// InconsistentMatching on a zero row with nonzero right-hand side.
template <typename C>
LinearSystemSolution<C> gauss_jordan(std::vector<std::vector<C>> A, std::vector<C> b, size_t ncols) {
  double scale = 0.0, bscale = 0.0;
  for (const auto& row : A) {
    for (const auto& v : row) scale = std::max(scale, magnitude(v));
  }
  for (const auto& v : b) bscale = std::max(bscale, magnitude(v));
  const double tol = 1e-10 * std::max(scale, 1.0);

  LinearSystemSolution<C> out;
  out.is_pivot.assign(ncols, false);
  size_t rank = 0;
  for (size_t col = 0; col < ncols && rank < A.size(); ++col) {
    size_t best = rank;
    for (size_t i = rank + 1; i < A.size(); ++i) {
      if (magnitude(A[i][col]) > magnitude(A[best][col])) best = i;
    }
    if (negligible(A[best][col], tol)) continue;
    std::swap(A[best], A[rank]);
    std::swap(b[best], b[rank]);
    const C inv = C(1) / A[rank][col];
    for (size_t j = col; j < ncols; ++j) A[rank][j] = A[rank][j] * inv;
    b[rank] = b[rank] * inv;
    for (size_t i = 0; i < A.size(); ++i) {
      if (i == rank || is_zero_coefficient(A[i][col])) continue;
      const C f = A[i][col];
      for (size_t j = col; j < ncols; ++j) A[i][j] = A[i][j] - f * A[rank][j];
      b[i] = b[i] - f * b[rank];
      A[i][col] = C(0);
    }
    out.pivot.push_back(col);
    out.is_pivot[col] = true;
    ++rank;
  }
  for (size_t i = rank; i < A.size(); ++i) {
    if (!negligible(b[i], 1e-9 * (1.0 + bscale))) {
      std::ostringstream os;
      os << "matching equations are inconsistent (residual " << magnitude(b[i]) << ")";
      throw InconsistentMatching(os.str());
    }
  }
  for (size_t i = 0; i < rank; ++i) {
    if constexpr (std::is_same_v<C, double>) {
      for (auto& v : A[i]) {
        if (std::abs(v) <= 1e-13 * std::max(scale, 1.0)) v = 0.0;
      }
      if (std::abs(b[i]) <= 1e-13 * (1.0 + bscale)) b[i] = 0.0;
    }
    out.rows.push_back(std::move(A[i]));
    out.rhs.push_back(b[i]);
  }
  return out;
}

/// Residual pieces of the matching equations for one annihilator row:
/// residual = constant + sum_i a_i per_coef[i].
template <typename C>
struct ResidualRow {
  PolyOf<C> constant;
  std::vector<PolyOf<C>> per_coef;
};

template <typename C>
std::vector<std::vector<PolyOf<C>>> desired_matrix(const DesignSpec& spec, const std::vector<std::string>& vars) {
  const size_t N = spec.lifted.dimension();
  std::vector<std::vector<PolyOf<C>>> Fd(N, std::vector<PolyOf<C>>(N, PolyOf<C>(vars)));
  for (size_t k = 0; k < N; ++k) {
    for (size_t j = 0; j < N; ++j) {
      Rational v = spec.Jd.empty() ? Rational(0) : spec.Jd[k][j];
      if (k == j) v -= spec.r;
      C c;
      if constexpr (std::is_same_v<C, double>) {
        c = v.to_double();
      } else {
        c = v;
      }
      Fd[k][j] = PolyOf<C>::constant(c, vars);
    }
  }
  return Fd;
}

PolyMatrix open_loop_matrix(const LiftedPHSystem& L) {
  const size_t N = L.dimension();
  PolyMatrix F(N, std::vector<Poly>(N));
  for (size_t k = 0; k < N; ++k) {
    for (size_t j = 0; j < N; ++j) F[k][j] = (L.Jscript[k][j] - L.Rscript[k][j]).with_variables(L.vars);
  }
  return F;
}

/// Exact lambda_perp_row (J - R) grad H over xbar.
Poly open_loop_residual(const LiftedPHSystem& L, const std::vector<Poly>& row) {
  std::vector<Poly> g;
  for (const auto& p : L.gradient) g.push_back(p.with_variables(L.vars));
  std::vector<Poly> rr;
  for (const auto& p : row) rr.push_back(p.with_variables(L.vars));
  return weighted<Rational>(rr, open_loop_matrix(L), g, L.vars);
}

template <typename C>
std::vector<ResidualRow<C>> residual_rows(const DesignSpec& spec, const std::vector<PolyOf<C>>& shapes,
                                          const std::vector<std::string>& vars,
                                          const std::vector<PolyOf<C>>& open_loop,
                                          const std::vector<std::vector<PolyOf<C>>>& rows) {
  const auto Fd = desired_matrix<C>(spec, vars);
  std::vector<ResidualRow<C>> out;
  for (size_t l = 0; l < rows.size(); ++l) {
    ResidualRow<C> rr;
    rr.constant = open_loop[l];
    for (const auto& s : shapes) {
      std::vector<PolyOf<C>> grad;
      for (const auto& v : vars) grad.push_back(s.derivative(v));
      rr.per_coef.push_back(-weighted<C>(rows[l], Fd, grad, vars));
    }
    out.push_back(std::move(rr));
  }
  return out;
}

template <typename C>
LinearSystemSolution<C> solve_matching(const std::vector<ResidualRow<C>>& rows, size_t ncoef,
                                       std::vector<MatchingEquation>* equations) {
  std::vector<std::vector<C>> A;
  std::vector<C> b;
  for (const auto& rr : rows) {
    std::set<Exponents, GrlexLess> mons;
    for (const auto& [e, c] : rr.constant.terms()) mons.insert(e);
    for (const auto& p : rr.per_coef) {
      for (const auto& [e, c] : p.terms()) mons.insert(e);
    }
    for (const auto& m : mons) {
      std::vector<C> row(ncoef, C(0));
      for (size_t i = 0; i < ncoef; ++i) row[i] = rr.per_coef[i].coefficient(m);
      const C rhs = -rr.constant.coefficient(m);
      if (equations) {
        if constexpr (std::is_same_v<C, Rational>) {
          MatchingEquation eq;
          for (size_t i = 0; i < ncoef; ++i) {
            if (!row[i].is_zero()) eq.coeffs.emplace(i, row[i]);
          }
          eq.rhs = rhs;
          equations->push_back(std::move(eq));
        }
      }
      A.push_back(std::move(row));
      b.push_back(rhs);
    }
  }
  return gauss_jordan<C>(std::move(A), std::move(b), ncoef);
}

/// H_d = particular + sum_f t_f basis_f from a reduced system.
template <typename C>
void family_from(const LinearSystemSolution<C>& sol, const std::vector<PolyOf<C>>& shapes,
                 const std::vector<std::string>& vars, PolyOf<C>& particular, std::vector<PolyOf<C>>& basis,
                 std::vector<size_t>& free_cols) {
  particular = PolyOf<C>(vars);
  for (size_t i = 0; i < sol.pivot.size(); ++i) particular += sol.rhs[i] * shapes[sol.pivot[i]];
  particular = particular.with_variables(vars);
  for (size_t f = 0; f < shapes.size(); ++f) {
    if (sol.is_pivot[f]) continue;
    PolyOf<C> b = shapes[f].with_variables(vars);
    for (size_t i = 0; i < sol.pivot.size(); ++i) {
      if (!is_zero_coefficient(sol.rows[i][f])) b -= sol.rows[i][f] * shapes[sol.pivot[i]];
    }
    basis.push_back(b.with_variables(vars));
    free_cols.push_back(f);
  }
}

struct TemplateShapes {
  std::vector<std::string> names;
  /// Monomials of omega over the template variables (indices into vars).
  std::vector<Exponents> omega;
};

std::vector<size_t> omega_indices(const DesignSpec& spec, const HdTemplate& hd) {
  std::vector<size_t> idx;
  if (hd.omega_vars.empty()) {
    for (size_t k = 0; k < spec.lifted.dimension(); ++k) idx.push_back(k);
    return idx;
  }
  for (const auto& v : hd.omega_vars) {
    const auto it = std::find(spec.lifted.vars.begin(), spec.lifted.vars.end(), v);
    if (it == spec.lifted.vars.end()) throw Error("template variable '" + v + "' is not a lifted variable");
    idx.push_back(static_cast<size_t>(it - spec.lifted.vars.begin()));
  }
  return idx;
}

/// Omega monomials expanded to the full variable list.
std::vector<Exponents> omega_exponents(const DesignSpec& spec, const HdTemplate& hd) {
  const auto idx = omega_indices(spec, hd);
  std::vector<Exponents> out;
  for (const auto& e : monomials_up_to(idx.size(), static_cast<uint32_t>(hd.omega_degree))) {
    Exponents full(spec.lifted.dimension(), 0);
    for (size_t i = 0; i < idx.size(); ++i) full[idx[i]] = e[i];
    out.push_back(full);
  }
  return out;
}

std::vector<std::vector<Poly>> annihilator_rows(const DesignSpec& spec) {
  std::vector<std::vector<Poly>> rows;
  for (const auto& row : spec.annihilator) {
    std::vector<Poly> r;
    for (const auto& p : row) r.push_back(p.with_variables(spec.lifted.vars));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::map<std::string, PolyD> shift_map(const DesignSpec& spec, const std::vector<std::string>& z) {
  std::map<std::string, PolyD> subs;
  for (size_t k = 0; k < z.size(); ++k) {
    subs.emplace(spec.lifted.vars[k],
                 PolyD::variable(z[k], z) + PolyD::constant(spec.setpoint[k], z));
  }
  return subs;
}

PolyD to_z(const PolyD& p, const std::map<std::string, PolyD>& subs, const std::vector<std::string>& z) {
  return p.compose(subs).with_variables(z);
}

PolyD to_z(const Poly& p, const std::map<std::string, PolyD>& subs, const std::vector<std::string>& z) {
  return to_z(to_double_poly(p), subs, z);
}

PolyD from_z(const PolyD& p, const DesignSpec& spec, const std::vector<std::string>& z) {
  std::map<std::string, PolyD> subs;
  const auto& xb = spec.lifted.vars;
  for (size_t k = 0; k < z.size(); ++k) {
    subs.emplace(z[k], PolyD::variable(xb[k], xb) - PolyD::constant(spec.setpoint[k], xb));
  }
  return p.with_variables(z).compose(subs).with_variables(xb);
}

double max_abs_coefficient(const PolyD& p) {
  double m = 0.0;
  for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

Exponents unit(size_t n, size_t i) {
  Exponents e(n, 0);
  e[i] = 1;
  return e;
}

}  // namespace

DesignSpec make_design_spec(LiftedPHSystem lifted, std::vector<double> base_setpoint) {
  DesignSpec spec;
  const size_t N = lifted.dimension();
  if (base_setpoint.size() != lifted.n) {
    throw Error("setpoint has " + std::to_string(base_setpoint.size()) + " components, expected " +
                std::to_string(lifted.n));
  }
  spec.setpoint = lifted.immersion.evaluate(base_setpoint);
  spec.base_setpoint = std::move(base_setpoint);
  for (size_t k = 0; k < lifted.n; ++k) {
    bool actuated = false;
    for (const auto& port : lifted.ports) actuated = actuated || !port[k].is_zero();
    if (actuated) continue;
    std::vector<Poly> row(N, Poly(lifted.vars));
    row[k] = Poly::constant(Rational(1), lifted.vars);
    spec.annihilator.push_back(std::move(row));
  }
  spec.lifted = std::move(lifted);
  return spec;
}

void check_design_spec(const DesignSpec& spec) {
  const auto& L = spec.lifted;
  const size_t N = L.dimension();
  if (!(spec.r > Rational(0))) throw Error("desired damping r must be positive");
  if (!spec.Jd.empty()) {
    if (spec.Jd.size() != N) throw Error("J_d must be " + std::to_string(N) + " x " + std::to_string(N));
    for (size_t i = 0; i < N; ++i) {
      if (spec.Jd[i].size() != N) throw Error("J_d row has wrong length");
      for (size_t j = 0; j < N; ++j) {
        if (spec.Jd[i][j] != -spec.Jd[j][i]) throw Error("J_d is not skew-symmetric");
      }
    }
  }
  if (spec.setpoint.size() != N || spec.base_setpoint.size() != L.n) throw Error("setpoint has wrong dimension");
  if (spec.radius <= 0.0) throw Error("ball radius must be positive");
  if (spec.delta < 0.0) throw Error("convexity margin must be nonnegative");
  for (size_t l = 0; l < spec.annihilator.size(); ++l) {
    const auto& row = spec.annihilator[l];
    if (row.size() != N) throw Error("annihilator row has wrong length");
    for (size_t i = 0; i < L.m(); ++i) {
      Poly dot(L.vars);
      for (size_t k = 0; k < N; ++k) dot += row[k].with_variables(L.vars) * L.ports[i][k].with_variables(L.vars);
      if (!dot.is_zero()) {
        throw Error("annihilator row " + std::to_string(l + 1) + " does not annihilate port " +
                    std::to_string(i + 1) + ": " + dot.to_string());
      }
    }
  }
  const auto on = L.immersion.evaluate(std::span<const double>(spec.setpoint.data(), L.n));
  for (size_t k = 0; k < N; ++k) {
    if (std::abs(on[k] - spec.setpoint[k]) > 1e-12 * (1.0 + std::abs(on[k]))) {
      throw Error("setpoint is off the immersion manifold at " + L.vars[k]);
    }
  }
}

HdTemplate default_template(const DesignSpec& spec) {
  HdTemplate t;
  t.omega_degree = spec.omega_degree;
  return t;
}

std::optional<Rational> MatchingResult::fixed_coefficient(size_t i) const { return pinned.at(i); }

MatchingResult matching_constraints(const DesignSpec& spec, const HdTemplate& hd) {
  const auto& L = spec.lifted;
  const auto& vars = L.vars;
  MatchingResult res;
  for (size_t i = 0; i < hd.fixed_terms.size(); ++i) {
    res.shapes.push_back(hd.fixed_terms[i].with_variables(vars));
    res.coefficient_names.push_back("c" + std::to_string(i + 1));
  }
  for (const auto& e : omega_exponents(spec, hd)) {
    res.shapes.push_back(Poly::monomial(Rational(1), e, vars));
    res.coefficient_names.push_back("a[" + monomial_name(e, vars) + "]");
  }
  const auto rows = annihilator_rows(spec);
  std::vector<Poly> open;
  for (const auto& row : rows) open.push_back(open_loop_residual(L, row));
  const auto rr = residual_rows<Rational>(spec, res.shapes, vars, open, rows);
  const auto sol = solve_matching<Rational>(rr, res.shapes.size(), &res.equations);

  res.pinned.assign(res.shapes.size(), std::nullopt);
  for (size_t i = 0; i < sol.pivot.size(); ++i) {
    bool alone = true;
    for (size_t f = 0; f < res.shapes.size(); ++f) {
      if (!sol.is_pivot[f] && !sol.rows[i][f].is_zero()) alone = false;
    }
    if (alone) res.pinned[sol.pivot[i]] = sol.rhs[i];
  }
  std::vector<size_t> free_cols;
  family_from<Rational>(sol, res.shapes, vars, res.particular, res.free_basis, free_cols);
  return res;
}

HdFamily matched_family(const DesignSpec& spec, const HdTemplate& hd) {
  const auto& L = spec.lifted;
  const size_t N = L.dimension();
  HdFamily fam;
  fam.vars = numbered("z", N);
  const auto& z = fam.vars;
  const auto subs = shift_map(spec, z);

  std::vector<PolyD> shapes;
  std::vector<std::string> names;
  for (size_t i = 0; i < hd.fixed_terms.size(); ++i) {
    shapes.push_back(to_z(hd.fixed_terms[i].with_variables(L.vars), subs, z));
    names.push_back("c" + std::to_string(i + 1));
  }
  for (const auto& e : omega_exponents(spec, hd)) {
    shapes.push_back(PolyD::monomial(1.0, e, z));
    names.push_back("a[" + monomial_name(e, z) + "]");
  }
  const auto rows = annihilator_rows(spec);
  std::vector<std::vector<PolyD>> zrows;
  std::vector<PolyD> open;
  for (const auto& row : rows) {
    std::vector<PolyD> zr;
    for (const auto& p : row) zr.push_back(to_z(p, subs, z));
    zrows.push_back(std::move(zr));
    open.push_back(to_z(open_loop_residual(L, row), subs, z));
  }
  const auto rr = residual_rows<double>(spec, shapes, z, open, zrows);
  const auto sol = solve_matching<double>(rr, shapes.size(), nullptr);
  std::vector<size_t> free_cols;
  family_from<double>(sol, shapes, z, fam.particular, fam.basis, free_cols);
  for (size_t f : free_cols) fam.names.push_back(names[f]);
  return fam;
}

DesignProgram build_sos_program(const DesignSpec& spec, const HdFamily& family) {
  const auto& L = spec.lifted;
  const size_t N = L.dimension();
  const size_t n = L.n;
  DesignProgram dp;
  dp.z_vars = family.vars;
  dp.nu_vars = numbered("nu", N);
  SosProgram& prog = dp.program;
  prog.vars = dp.z_vars;
  prog.vars.insert(prog.vars.end(), dp.nu_vars.begin(), dp.nu_vars.end());
  prog.delta = spec.delta;
  prog.radius = spec.radius;
  const auto& vars = prog.vars;
  const size_t nv = vars.size();
  if (spec.delta == 0.0) prog.warnings.push_back("delta = 0: strict convexity is not enforced");

  LinearPoly hd(family.particular.with_variables(vars));
  for (size_t j = 0; j < family.basis.size(); ++j) {
    const size_t d = prog.add_decision(family.names[j]);
    dp.family_decisions.push_back(d);
    hd += LinearPoly::decision(d, family.basis[j].with_variables(vars));
  }

  // Stationarity and zero value at z = 0.
  auto coefficient_form = [&](const Exponents& e) {
    LinearForm f;
    f.constant = hd.constant.coefficient(e);
    for (const auto& [k, q] : hd.terms) {
      const double v = q.coefficient(e);
      if (v != 0.0) f.coeffs.emplace(k, v);
    }
    return f;
  };
  for (size_t i = 0; i < N; ++i) prog.equalities.push_back(coefficient_form(unit(nv, i)));
  prog.equalities.push_back(coefficient_form(Exponents(nv, 0)));

  // nu^T Hess nu - delta nu^T nu.
  LinearPoly sigma{PolyD(vars)};
  std::vector<LinearPoly> first;
  for (size_t i = 0; i < N; ++i) first.push_back(hd.derivative(vars[i]));
  for (size_t i = 0; i < N; ++i) {
    for (size_t j = 0; j < N; ++j) {
      const LinearPoly hij = first[i].derivative(vars[j]);
      if (hij.is_zero()) continue;
      Exponents e(nv, 0);
      e[N + i] += 1;
      e[N + j] += 1;
      sigma += PolyD::monomial(1.0, e, vars) * hij;
    }
  }
  for (size_t i = 0; i < N; ++i) {
    Exponents e(nv, 0);
    e[N + i] = 2;
    sigma -= LinearPoly(PolyD::monomial(spec.delta, e, vars));
  }

  // mu_0 = 1 - |z|^2 / radius^2.
  dp.mu0 = PolyD::constant(1.0, dp.z_vars);
  for (size_t i = 0; i < N; ++i) {
    Exponents e(N, 0);
    e[i] = 2;
    dp.mu0 -= PolyD::monomial(1.0 / (spec.radius * spec.radius), e, dp.z_vars);
  }

  // mu_k = z_k + xbar^d_k - Taylor(psi_k) around x^d in z_{1:n}.
  const auto& orig = L.immersion.original_vars();
  std::map<std::string, double> at;
  for (size_t i = 0; i < n; ++i) at[orig[i]] = spec.base_setpoint[i];
  const auto taylor_mons = monomials_up_to(n, static_cast<uint32_t>(spec.taylor_order));
  for (size_t k = n; k < N; ++k) {
    std::map<Exponents, Expr> deriv;
    PolyD mu = PolyD::variable(dp.z_vars[k], dp.z_vars) + PolyD::constant(spec.setpoint[k], dp.z_vars);
    for (const auto& a : taylor_mons) {
      Expr d;
      if (total_degree(a) == 0) {
        d = L.immersion.coordinate_expr(k);
      } else {
        size_t i = 0;
        while (a[i] == 0) ++i;
        Exponents prev = a;
        --prev[i];
        d = differentiate(deriv.at(prev), orig[i]);
      }
      deriv.emplace(a, d);
      double fact = 1.0;
      for (uint32_t ai : a) {
        for (uint32_t q = 2; q <= ai; ++q) fact *= q;
      }
      const double c = eval(d, at) / fact;
      Exponents e(N, 0);
      std::copy(a.begin(), a.end(), e.begin());
      mu -= PolyD::monomial(c, e, dp.z_vars);
    }
    dp.surrogates.push_back(mu);
  }

  const auto mult = monomials_up_to(nv, static_cast<uint32_t>(spec.multiplier_degree));
  auto multiplier = [&](const std::string& name) {
    LinearPoly s{PolyD(vars)};
    for (const auto& e : mult) {
      const size_t d = prog.add_decision(name + "[" + monomial_name(e, vars) + "]");
      s += LinearPoly::decision(d, PolyD::monomial(1.0, e, vars));
    }
    return s;
  };
  const LinearPoly s0 = multiplier("s0");
  sigma -= dp.mu0.with_variables(vars) * s0;
  for (size_t k = 0; k < dp.surrogates.size(); ++k) {
    const LinearPoly sk = multiplier("s" + std::to_string(k + 1));
    sigma -= dp.surrogates[k].with_variables(vars) * sk;
  }
  // At nu = 0 both constraints vanish on the surrogate manifold inside the
  // ball, so their Gram matrices are singular on every monomial free of nu.
  // Restricting the bases to monomials linear in nu removes that face.
  auto linear_in_nu = [&](const LinearPoly& p) {
    std::vector<Exponents> out;
    const uint32_t deg = p.total_degree();
    if (deg < 2) return out;
    for (const auto& a : monomials_up_to(N, (deg - 2) / 2)) {
      for (size_t i = 0; i < N; ++i) {
        Exponents e(nv, 0);
        std::copy(a.begin(), a.end(), e.begin());
        e[N + i] = 1;
        out.push_back(std::move(e));
      }
    }
    return out;
  };
  auto sigma_basis = linear_in_nu(sigma);
  auto s0_basis = linear_in_nu(s0);
  prog.sos.push_back({"convexity", std::move(sigma), std::move(sigma_basis)});
  prog.sos.push_back({"s0", s0, std::move(s0_basis)});
  return dp;
}

double sampled_hessian_min_eigenvalue(const DesignSpec& spec, const DesignProgram& prog,
                                      const PolyD& hd_shifted, size_t samples, uint64_t seed) {
  const size_t N = spec.lifted.dimension();
  const size_t n = spec.lifted.n;
  const auto& z = prog.z_vars;
  std::vector<std::vector<CompiledPoly>> hess(N, std::vector<CompiledPoly>(N));
  for (size_t i = 0; i < N; ++i) {
    const PolyD di = hd_shifted.with_variables(z).derivative(z[i]);
    for (size_t j = 0; j < N; ++j) hess[i][j] = CompiledPoly(di.derivative(z[j]), z);
  }
  std::vector<CompiledPoly> lifted;
  for (const auto& mu : prog.surrogates) lifted.emplace_back(-mu, z);

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-spec.radius, spec.radius);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> pt(N);
  Eigen::MatrixXd H(N, N);
  size_t taken = 0, tries = 0;
  while (taken < samples) {
    if (++tries > 1000 * samples + 1000) throw Error("localized region could not be sampled");
    std::fill(pt.begin(), pt.end(), 0.0);
    for (size_t i = 0; i < n; ++i) pt[i] = U(gen);
    for (size_t k = n; k < N; ++k) pt[k] = lifted[k - n](pt);
    double r2 = 0.0;
    for (double v : pt) r2 += v * v;
    if (r2 > spec.radius * spec.radius) continue;
    for (size_t i = 0; i < N; ++i) {
      for (size_t j = 0; j < N; ++j) H(i, j) = hess[i][j](pt);
    }
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues()[0]);
    ++taken;
  }
  return worst;
}

DesignResult design(const DesignSpec& spec, const HdTemplate& hd, const DesignOptions& options) {
  check_design_spec(spec);
  DesignResult res;
  res.matching = matching_constraints(spec, hd);
  res.family = matched_family(spec, hd);
  res.program = build_sos_program(spec, res.family);
  res.compiled = compile_to_sdp(res.program.program, options.compile);
  if (options.minimize_trace) {
    res.compiled.sdp.trace_weights.assign(res.compiled.sdp.block_sizes.size(), 0.0);
    const auto& g = res.compiled.gram.front();
    if (g.block < res.compiled.sdp.block_sizes.size()) res.compiled.sdp.trace_weights[g.block] = 1.0;
  }
  res.solution = solve_sdp(res.compiled.sdp, options.sdp);
  res.feasible = res.solution.feasible();
  if (!res.feasible) return res;

  const auto& dec = res.solution.free;
  const auto& z = res.family.vars;
  const size_t N = z.size();
  res.hd_shifted = res.family.particular;
  for (size_t j = 0; j < res.family.basis.size(); ++j) {
    res.hd_shifted += dec[res.program.family_decisions[j]] * res.family.basis[j];
  }
  res.hd_shifted = res.hd_shifted.with_variables(z);
  res.hd = from_z(res.hd_shifted, spec, z);
  res.hd_at_setpoint = res.hd_shifted.coefficient(Exponents(N, 0));
  double g2 = 0.0;
  for (size_t i = 0; i < N; ++i) {
    const double g = res.hd_shifted.coefficient(unit(N, i));
    g2 += g * g;
  }
  res.gradient_norm_at_setpoint = std::sqrt(g2);

  const auto& prog = res.program.program;
  for (size_t b = 0; b < prog.sos.size(); ++b) {
    const auto& info = res.compiled.gram[b];
    const Eigen::MatrixXd Q = info.block < res.solution.blocks.size() ? res.solution.blocks[info.block]
                                                                      : Eigen::MatrixXd();
    res.gram_checks.push_back(check_gram(prog.sos[b], info, Q, dec, prog.vars));
  }
  for (const auto& eq : prog.equalities) {
    res.equality_residual = std::max(res.equality_residual, std::abs(eq.evaluate(dec)));
  }

  const auto subs = shift_map(spec, z);
  const auto Fd = desired_matrix<double>(spec, z);
  std::vector<PolyD> grad_d;
  for (const auto& v : z) grad_d.push_back(res.hd_shifted.derivative(v));
  for (const auto& row : annihilator_rows(spec)) {
    std::vector<PolyD> zr;
    for (const auto& p : row) zr.push_back(to_z(p, subs, z));
    const PolyD resid = to_z(open_loop_residual(spec.lifted, row), subs, z) - weighted<double>(zr, Fd, grad_d, z);
    res.matching_residual = std::max(res.matching_residual, max_abs_coefficient(resid));
  }
  res.hessian_min_eigenvalue =
      sampled_hessian_min_eigenvalue(spec, res.program, res.hd_shifted, options.hessian_samples, options.seed);
  return res;
}

Controller::Controller(const DesignSpec& spec, const PolyD& hd_shifted) {
  const auto& L = spec.lifted;
  N_ = L.dimension();
  m_ = L.m();
  setpoint_ = spec.setpoint;
  const auto z = numbered("z", N_);
  const auto F = open_loop_matrix(L);
  const auto Fd = desired_matrix<double>(spec, z);
  const PolyD hz = hd_shifted.with_variables(z);
  std::vector<PolyD> grad_d;
  for (const auto& v : z) grad_d.push_back(hz.derivative(v));
  const auto xsubs = [&] {
    std::map<std::string, PolyD> s;
    for (size_t k = 0; k < N_; ++k) {
      s.emplace(z[k], PolyD::variable(L.vars[k], L.vars) - PolyD::constant(setpoint_[k], L.vars));
    }
    return s;
  }();
  for (size_t k = 0; k < N_; ++k) {
    Poly open(L.vars);
    for (size_t j = 0; j < N_; ++j) open += F[k][j] * L.gradient[j].with_variables(L.vars);
    PolyD desired(z);
    for (size_t j = 0; j < N_; ++j) desired += Fd[k][j] * grad_d[j];
    open_loop_.emplace_back(open, L.vars);
    desired_.emplace_back(desired, z);
    residual_xbar_.push_back(desired.compose(xsubs).with_variables(L.vars) - to_double_poly(open));
  }
  for (const auto& port : L.ports) {
    std::vector<CompiledPoly> col;
    std::vector<Poly> polys;
    for (const auto& p : port) {
      col.emplace_back(p, L.vars);
      polys.push_back(p.with_variables(L.vars));
    }
    ports_.push_back(std::move(col));
    port_polys_.push_back(std::move(polys));
  }
}

void Controller::evaluate(std::span<const double> xbar, std::span<double> u) const {
  std::vector<double> zv(N_);
  for (size_t k = 0; k < N_; ++k) zv[k] = xbar[k] - setpoint_[k];
  Eigen::VectorXd r(N_);
  for (size_t k = 0; k < N_; ++k) r[k] = desired_[k](zv) - open_loop_[k](xbar);
  Eigen::MatrixXd Lam(N_, m_);
  for (size_t i = 0; i < m_; ++i) {
    for (size_t k = 0; k < N_; ++k) Lam(k, i) = ports_[i][k](xbar);
  }
  const Eigen::MatrixXd G = Lam.transpose() * Lam;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (m_ > 0 && es.eigenvalues()[0] < 1e-10) {
    std::ostringstream os;
    os << "port Gram matrix is singular (smallest eigenvalue " << es.eigenvalues()[0] << ")";
    throw PortGramSingular(os.str());
  }
  const Eigen::VectorXd sol = G.ldlt().solve(Lam.transpose() * r);
  for (size_t i = 0; i < m_; ++i) u[i] = sol[i];
}

std::vector<double> Controller::operator()(std::span<const double> xbar) const {
  std::vector<double> u(m_);
  evaluate(xbar, u);
  return u;
}

std::optional<std::pair<PolyD, Poly>> Controller::rational_form() const {
  if (m_ != 1) return std::nullopt;
  const auto& vars = residual_xbar_.front().variables();
  PolyD num(vars);
  Poly den(port_polys_[0].front().variables());
  for (size_t k = 0; k < N_; ++k) {
    num += to_double_poly(port_polys_[0][k]) * residual_xbar_[k];
    den += port_polys_[0][k] * port_polys_[0][k];
  }
  return std::make_pair(num.with_variables(vars), den);
}

Controller extract_controller(const DesignSpec& spec, const PolyD& hd_shifted) {
  return Controller(spec, hd_shifted);
}

bool ClosedLoopReport::converged(double distance_tol) const {
  for (const auto& r : runs) {
    if (!(r.final_distance <= distance_tol)) return false;
  }
  return true;
}

bool ClosedLoopReport::monotone() const {
  for (const auto& r : runs) {
    if (r.monotone_violations > 0 || !r.failure.empty()) return false;
  }
  return true;
}

std::vector<std::vector<double>> manifold_initial_states(const DesignSpec& spec,
                                                         const std::vector<std::vector<double>>& base) {
  std::vector<std::vector<double>> out;
  for (const auto& x : base) {
    if (x.size() != spec.lifted.n) throw Error("initial condition has wrong dimension");
    out.push_back(spec.lifted.immersion.evaluate(x));
  }
  return out;
}

ClosedLoopReport closed_loop_validate(const DesignSpec& spec, const Controller& controller,
                                      const PolyD& hd_shifted,
                                      const std::vector<std::vector<double>>& initial_states,
                                      const ClosedLoopOptions& options) {
  const size_t N = spec.lifted.dimension();
  const size_t n = spec.lifted.n;
  Model model = make_model(spec.lifted);
  const auto z = numbered("z", N);
  const CompiledPoly hdc(hd_shifted.with_variables(z), z);
  const std::vector<double> xd = spec.setpoint;
  model.hamiltonian = [hdc, xd](std::span<const double> x) {
    std::vector<double> zv(x.size());
    for (size_t k = 0; k < x.size(); ++k) zv[k] = x[k] - xd[k];
    return hdc(zv);
  };
  const InputSignal law = InputSignal::feedback(
      controller.inputs(),
      [&controller](double, std::span<const double> x, std::span<double> u) { controller.evaluate(x, u); });

  auto run = [&](const std::vector<double>& x0) {
    if (x0.size() != N) throw Error("initial state has wrong dimension");
    ClosedLoopRun out;
    out.initial_state = x0;
    try {
      out.trajectory = integrate(model, x0, law, 0.0, options.t_end, options.step);
    } catch (const Error& e) {
      out.failure = e.what();
      out.final_distance = out.hd_final = out.max_increase = std::numeric_limits<double>::infinity();
      return out;
    }
    const auto& tr = out.trajectory;
    double d2 = 0.0;
    for (size_t k = 0; k < N; ++k) d2 += (tr.x.back()[k] - xd[k]) * (tr.x.back()[k] - xd[k]);
    out.final_distance = std::sqrt(d2);
    out.hd_final = tr.H.back();
    out.max_increase = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k + 1 < tr.size(); ++k) {
      const double inc = tr.H[k + 1] - tr.H[k];
      out.max_increase = std::max(out.max_increase, inc);
      if (inc > options.monotone_tolerance) ++out.monotone_violations;
    }
    for (const auto& x : tr.x) {
      const auto psi = spec.lifted.immersion.evaluate(std::span<const double>(x.data(), n));
      for (size_t k = 0; k < N; ++k) out.manifold_drift = std::max(out.manifold_drift, std::abs(x[k] - psi[k]));
    }
    return out;
  };
  std::vector<std::future<ClosedLoopRun>> tasks;
  for (const auto& x0 : initial_states) tasks.push_back(std::async(std::launch::async, run, x0));
  ClosedLoopReport rep;
  for (auto& t : tasks) rep.runs.push_back(t.get());
  return rep;
}

void write_design_report(std::ostream& os, const DesignSpec& spec, const DesignResult& res,
                         const ClosedLoopReport* loop) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "[design]\n";
  os << "setpoint";
  for (double v : spec.setpoint) os << ' ' << v;
  os << "\nr " << spec.r.to_string() << "\nradius " << spec.radius << "\ndelta " << spec.delta
     << "\nomega_degree " << spec.omega_degree << "\nmultiplier_degree " << spec.multiplier_degree
     << "\ntaylor_order " << spec.taylor_order << '\n';
  for (const auto& w : res.program.program.warnings) os << "warning " << w << '\n';

  os << "\n[matching]\n";
  for (size_t i = 0; i < res.matching.shapes.size(); ++i) {
    if (res.matching.pinned[i]) {
      os << res.matching.coefficient_names[i] << ' ' << res.matching.pinned[i]->to_string() << '\n';
    }
  }
  os << "free_parameters " << res.family.basis.size() << '\n';

  os << "\n[sdp]\n";
  os << "decisions " << res.program.program.num_decisions() << "\nequalities "
     << res.program.program.equalities.size() << "\nrows " << res.compiled.sdp.num_rows() << "\nblocks";
  for (size_t s : res.compiled.sdp.block_sizes) os << ' ' << s;
  os << "\nstatus " << (res.feasible ? "feasible" : "infeasible") << "\niterations " << res.solution.iterations
     << "\nmargin " << res.solution.margin << '\n';
  if (!res.solution.detail.empty()) os << "detail " << res.solution.detail << '\n';
  if (!res.feasible) {
    os << "certificate_dual_value " << res.solution.certificate.dual_value << "\ncertificate_cone_violation "
       << res.solution.certificate.cone_violation << '\n';
  } else {
    os << "\n[checks]\n";
    os << "hd_at_setpoint " << res.hd_at_setpoint << "\ngradient_norm_at_setpoint "
       << res.gradient_norm_at_setpoint << "\nequality_residual " << res.equality_residual
       << "\nmatching_residual " << res.matching_residual << "\nsdp_residual " << res.solution.residual
       << "\nhessian_min_eigenvalue " << res.hessian_min_eigenvalue << '\n';
    for (size_t b = 0; b < res.gram_checks.size(); ++b) {
      os << "gram " << res.compiled.gram[b].name << " size " << res.compiled.gram[b].basis.size() << " min_eig "
         << res.gram_checks[b].min_eigenvalue << " coefficient_error " << res.gram_checks[b].coefficient_error
         << '\n';
    }
    os << "\n[hd]\n";
    for (const auto& [e, c] : res.hd.terms()) os << monomial_name(e, res.hd.variables()) << ' ' << c << '\n';
  }
  if (loop) {
    os << "\n[closed_loop]\n";
    for (size_t k = 0; k < loop->runs.size(); ++k) {
      const auto& r = loop->runs[k];
      os << "run " << k + 1 << " final_distance " << r.final_distance << " hd_final " << r.hd_final
         << " max_increase " << r.max_increase << " violations " << r.monotone_violations << " manifold_drift "
         << r.manifold_drift;
      if (!r.failure.empty()) os << " failure " << r.failure;
      os << '\n';
    }
  }
  os.flags(flags);
  os.precision(prec);
}

void write_hd_csv(std::ostream& os, const DesignResult& res) {
  const auto prec = os.precision();
  os << std::setprecision(17) << "monomial,coefficient\n";
  for (const auto& [e, c] : res.hd.terms()) os << monomial_name(e, res.hd.variables()) << ',' << c << '\n';
  os.precision(prec);
}

}  // namespace phlift
