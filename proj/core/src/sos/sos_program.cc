#include "phlift/sos/sos_program.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "phlift/errors.h"

namespace phlift {

LinearPoly LinearPoly::decision(size_t index, const PolyD& shape) {
  LinearPoly l(PolyD(shape.variables()));
  l.terms.emplace(index, shape);
  return l;
}

LinearPoly& LinearPoly::operator+=(const LinearPoly& o) {
  constant += o.constant;
  for (const auto& [k, p] : o.terms) {
    auto [it, inserted] = terms.try_emplace(k, p);
    if (!inserted) {
      it->second += p;
      if (it->second.is_zero()) terms.erase(it);
    }
  }
  return *this;
}

LinearPoly& LinearPoly::operator-=(const LinearPoly& o) { return *this += (-1.0) * o; }

LinearPoly operator*(const PolyD& p, const LinearPoly& l) {
  LinearPoly out(p * l.constant);
  for (const auto& [k, q] : l.terms) {
    PolyD r = p * q;
    if (!r.is_zero()) out.terms.emplace(k, std::move(r));
  }
  return out;
}

LinearPoly operator*(double s, const LinearPoly& l) {
  LinearPoly out(s * l.constant);
  if (s == 0.0) return out;
  for (const auto& [k, q] : l.terms) out.terms.emplace(k, s * q);
  return out;
}

LinearPoly LinearPoly::derivative(const std::string& var) const {
  LinearPoly out(constant.derivative(var));
  for (const auto& [k, q] : terms) {
    PolyD d = q.derivative(var);
    if (!d.is_zero()) out.terms.emplace(k, std::move(d));
  }
  return out;
}

PolyD LinearPoly::evaluate(std::span<const double> decisions) const {
  PolyD out = constant;
  for (const auto& [k, q] : terms) out += decisions[k] * q;
  return out;
}

std::vector<Exponents> LinearPoly::support() const {
  std::set<Exponents, GrlexLess> s;
  for (const auto& [e, c] : constant.terms()) s.insert(e);
  for (const auto& [k, q] : terms) {
    for (const auto& [e, c] : q.terms()) s.insert(e);
  }
  return {s.begin(), s.end()};
}

bool LinearPoly::is_zero() const { return constant.is_zero() && terms.empty(); }

uint32_t LinearPoly::total_degree() const {
  uint32_t d = constant.total_degree();
  for (const auto& [k, q] : terms) d = std::max(d, q.total_degree());
  return d;
}

double LinearForm::evaluate(std::span<const double> decisions) const {
  double v = constant;
  for (const auto& [k, c] : coeffs) v += c * decisions[k];
  return v;
}

size_t SosProgram::add_decision(std::string name) {
  decision_names.push_back(std::move(name));
  return decision_names.size() - 1;
}

namespace {

Exponents add(const Exponents& a, const Exponents& b) {
  Exponents e(a.size());
  for (size_t i = 0; i < a.size(); ++i) e[i] = a[i] + b[i];
  return e;
}

void enumerate(size_t var, Exponents& cur, uint32_t used, uint32_t lo_total, uint32_t hi_total,
               const std::vector<uint32_t>& lo, const std::vector<uint32_t>& hi,
               std::vector<Exponents>& out) {
  if (var == cur.size()) {
    if (used >= lo_total) out.push_back(cur);
    return;
  }
  for (uint32_t k = lo[var]; k <= hi[var] && used + k <= hi_total; ++k) {
    cur[var] = k;
    enumerate(var + 1, cur, used + k, lo_total, hi_total, lo, hi, out);
  }
  cur[var] = 0;
}

LinearPoly over(const LinearPoly& l, const std::vector<std::string>& vars) {
  LinearPoly out(l.constant.with_variables(vars));
  for (const auto& [k, q] : l.terms) out.terms.emplace(k, q.with_variables(vars));
  return out;
}

std::vector<Exponents> over_basis(const std::vector<Exponents>& b, size_t nv) {
  for (const auto& e : b) {
    if (e.size() != nv) throw std::invalid_argument("Gram candidate has wrong length");
  }
  return b;
}

}  // namespace

std::vector<Exponents> gram_basis(const LinearPoly& sigma, size_t nvars,
                                  const std::vector<Exponents>& candidates) {
  const auto support = sigma.support();
  if (support.empty()) return {};
  std::vector<uint32_t> maxd(nvars, 0), mind(nvars, UINT32_MAX);
  uint32_t maxt = 0, mint = UINT32_MAX;
  for (const auto& e : support) {
    for (size_t i = 0; i < nvars; ++i) {
      maxd[i] = std::max(maxd[i], e[i]);
      mind[i] = std::min(mind[i], e[i]);
    }
    maxt = std::max(maxt, total_degree(e));
    mint = std::min(mint, total_degree(e));
  }
  std::vector<uint32_t> lo(nvars), hi(nvars);
  for (size_t i = 0; i < nvars; ++i) {
    lo[i] = (mind[i] + 1) / 2;
    hi[i] = maxd[i] / 2;
  }
  std::vector<Exponents> basis;
  Exponents cur(nvars, 0);
  enumerate(0, cur, 0, (mint + 1) / 2, maxt / 2, lo, hi, basis);
  if (!candidates.empty()) {
    const std::set<Exponents> allowed(candidates.begin(), candidates.end());
    std::erase_if(basis, [&](const Exponents& e) { return !allowed.count(e); });
  }

  const std::set<Exponents> in_support(support.begin(), support.end());
  for (bool changed = true; changed;) {
    changed = false;
    std::set<Exponents> cross;
    for (size_t a = 0; a < basis.size(); ++a) {
      for (size_t b = a + 1; b < basis.size(); ++b) cross.insert(add(basis[a], basis[b]));
    }
    std::vector<Exponents> kept;
    for (const auto& m : basis) {
      const Exponents sq = add(m, m);
      if (in_support.count(sq) || cross.count(sq)) {
        kept.push_back(m);
      } else {
        changed = true;
      }
    }
    basis = std::move(kept);
  }
  std::sort(basis.begin(), basis.end(), GrlexLess{});
  return basis;
}

CompiledSdp compile_to_sdp(const SosProgram& prog, const CompileOptions& options) {
  CompiledSdp out;
  out.num_decisions = prog.num_decisions();
  out.sdp.num_free = prog.num_decisions();
  const size_t nv = prog.vars.size();

  for (const auto& eq : prog.equalities) {
    SdpProblem::Row row;
    for (const auto& [k, c] : eq.coeffs) {
      if (c != 0.0) row.free.emplace_back(k, c);
    }
    row.rhs = -eq.constant;
    out.sdp.rows.push_back(std::move(row));
  }

  for (const auto& c : prog.sos) {
    const LinearPoly sigma = over(c.poly, prog.vars);
    GramBlockInfo info;
    info.name = c.name;
    info.basis = gram_basis(sigma, nv, c.basis.empty() ? c.basis : over_basis(c.basis, nv));
    if (info.basis.size() > options.gram_cap) {
      throw BasisTooLarge("Gram basis for '" + c.name + "' has " + std::to_string(info.basis.size()) +
                          " monomials, cap is " + std::to_string(options.gram_cap));
    }
    std::map<Exponents, std::vector<SdpEntry>, GrlexLess> products;
    if (!info.basis.empty()) {
      info.block = out.sdp.block_sizes.size();
      out.sdp.block_sizes.push_back(info.basis.size());
      const auto blk = static_cast<uint32_t>(info.block);
      for (uint32_t a = 0; a < info.basis.size(); ++a) {
        for (uint32_t b = a; b < info.basis.size(); ++b) {
          products[add(info.basis[a], info.basis[b])].push_back({blk, a, b, a == b ? 1.0 : 2.0});
        }
      }
    }
    std::set<Exponents, GrlexLess> monomials;
    for (const auto& e : sigma.support()) monomials.insert(e);
    for (const auto& [e, entries] : products) monomials.insert(e);
    for (const auto& m : monomials) {
      SdpProblem::Row row;
      if (auto it = products.find(m); it != products.end()) row.gram = it->second;
      for (const auto& [k, q] : sigma.terms) {
        const double v = q.coefficient(m);
        if (v != 0.0) row.free.emplace_back(k, -v);
      }
      row.rhs = sigma.constant.coefficient(m);
      out.sdp.rows.push_back(std::move(row));
    }
    out.gram.push_back(std::move(info));
  }
  return out;
}

GramCheck check_gram(const SosConstraint& c, const GramBlockInfo& info, const Eigen::MatrixXd& Q,
                     std::span<const double> decisions, const std::vector<std::string>& vars) {
  GramCheck g;
  PolyD recon(vars);
  for (size_t a = 0; a < info.basis.size(); ++a) {
    for (size_t b = 0; b < info.basis.size(); ++b) {
      recon.add_term(add(info.basis[a], info.basis[b]), Q(a, b));
    }
  }
  const PolyD diff = over(c.poly, vars).evaluate(decisions) - recon;
  for (const auto& [e, v] : diff.terms()) g.coefficient_error = std::max(g.coefficient_error, std::abs(v));
  if (Q.rows() > 0) {
    g.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues()[0];
  }
  return g;
}

}  // namespace phlift
