#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phlift/expr/expr.h"
#include "phlift/lifting/immersion.h"

namespace phlift {

using ExprMatrix = std::vector<std::vector<Expr>>;
using PolyMatrix = std::vector<std::vector<Poly>>;

/// Input-state-output port-Hamiltonian system
///   xdot = (J(x) - R(x)) grad H(x) + sum_i g_i(x) u_i,  y_i = g_i(x)^T grad H(x).
struct PHSystem {
  std::vector<std::string> states;
  Expr hamiltonian;
  ExprMatrix J;
  ExprMatrix R;
  /// One column (length n) per input port.
  std::vector<std::vector<Expr>> g;
  DomainBox domain;

  size_t n() const { return states.size(); }
  size_t m() const { return g.size(); }

  std::vector<Expr> gradient() const;
  /// grad H, then J row-major, R row-major, then the input columns.
  std::vector<Expr> all_expressions() const;
};

struct ValidationReport {
  bool skew_symmetric = true;
  bool symmetric = true;
  bool psd = true;
  bool rational_hamiltonian = true;
  bool shapes = true;
  size_t psd_samples = 0;
  double worst_eigenvalue = 0.0;
  std::vector<std::string> failures;

  bool ok() const {
    return shapes && skew_symmetric && symmetric && psd && rational_hamiltonian;
  }
  std::string to_string() const;
};

struct ValidationOptions {
  size_t psd_samples = 1000;
  uint64_t seed = 0xab5eedULL;
  double psd_tolerance = 1e-9;
};

ValidationReport validate(const PHSystem& sys, const ValidationOptions& options = {});

/// Exact zero test for an expression with primitives treated as independent
/// atoms.
bool is_identically_zero(const Expr& e);

/// Polynomial pH system on the extended state xbar.
struct LiftedPHSystem {
  /// xbar1..xbarN.
  std::vector<std::string> vars;
  size_t n = 0;
  /// H composed with xbar_{1:n}.
  RatFn hamiltonian;
  /// [rewritten grad_x H; 0], polynomial.
  std::vector<Poly> gradient;
  PolyMatrix Jbar, Rbar;
  /// Rewritten input columns, each of length n.
  std::vector<std::vector<Poly>> xi_bar;
  /// r x n block of d psi / d x.
  PolyMatrix P;
  /// P (Rbar - Jbar), r x n.
  PolyMatrix Lambda;
  PolyMatrix Jscript, Rscript;
  /// Ports lambda_i = [xi_bar_i; P xi_bar_i], each of length N.
  std::vector<std::vector<Poly>> ports;
  Immersion immersion;

  size_t dimension() const { return vars.size(); }
  size_t r() const { return vars.size() - n; }
  size_t m() const { return ports.size(); }
};

/// Builds the lifted representation from an immersion covering every
/// primitive of `sys`. Reciprocal coordinates are added to the immersion as
/// needed so that every entry is polynomial.
LiftedPHSystem lift_ph(const PHSystem& sys, Immersion imm,
                       const ExtensionOptions& options = {});

/// collect_primitives, compute_closure, eliminate_redundancy and lift_ph.
LiftedPHSystem lift(const PHSystem& sys, const ClosureOptions& closure = {},
                    const ExtensionOptions& extension = {});

struct SymbolicVerdict {
  bool ok = false;
  /// Lifted-side expression (in xbar).
  Poly value;
  /// lifted - rewritten original, after cross-multiplication; zero when ok.
  Poly difference;
  std::string detail;
};

/// grad Hbar^T Rscript grad Hbar against the rewrite of grad H^T R grad H.
SymbolicVerdict dissipation_identity(const LiftedPHSystem& lifted, const PHSystem& orig);

/// lambda_i^T grad Hbar against the rewrite of g_i^T grad H, one per port.
std::vector<SymbolicVerdict> output_identity(const LiftedPHSystem& lifted,
                                             const PHSystem& orig);

struct StructureReport {
  bool jscript_skew = false;
  bool rscript_symmetric = false;
  bool hamiltonian_base_only = false;
  bool all_polynomial = false;
  bool ok() const {
    return jscript_skew && rscript_symmetric && hamiltonian_base_only && all_polynomial;
  }
};

StructureReport check_structure(const LiftedPHSystem& lifted);

/// Replaces reciprocal variables w = 1/b by the rational functions they
/// stand for.
RatFn expand_reciprocals(const RatFn& f, const Immersion& imm);

/// Ascending eigenvalues of Rscript at a point of the extended space.
std::vector<double> eigen_spectrum_at(const LiftedPHSystem& lifted,
                                      const std::vector<double>& point);

struct NumericAudit {
  size_t samples = 0;
  double max_dissipation_error = 0.0;  // relative to 1 + |value|
  double max_output_error = 0.0;
  double max_hamiltonian_error = 0.0;
};

/// Compares the lifted and original dissipation, outputs and Hamiltonian at
/// Psi_bar(x) for random x in the domain box. Work is split across threads,
/// each with its own generator.
NumericAudit numeric_identity_audit(const LiftedPHSystem& lifted, const PHSystem& orig,
                                    size_t samples = 1000, uint64_t seed = 17,
                                    unsigned threads = 0);

/// Evaluates a polynomial matrix at a point of its variable list.
std::vector<std::vector<double>> evaluate_matrix(const PolyMatrix& m,
                                                 const std::vector<std::string>& vars,
                                                 const std::vector<double>& point);

}  // namespace phlift
