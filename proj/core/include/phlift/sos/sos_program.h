#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phlift/expr/polynomial.h"
#include "phlift/sos/sdp.h"

namespace phlift {

/// Polynomial affine in decision variables: constant + sum_k d_k * terms[k].
struct LinearPoly {
  PolyD constant;
  std::map<size_t, PolyD> terms;

  LinearPoly() = default;
  explicit LinearPoly(PolyD c) : constant(std::move(c)) {}
  static LinearPoly decision(size_t index, const PolyD& shape);

  LinearPoly& operator+=(const LinearPoly& o);
  LinearPoly& operator-=(const LinearPoly& o);
  friend LinearPoly operator+(LinearPoly a, const LinearPoly& b) { return a += b; }
  friend LinearPoly operator-(LinearPoly a, const LinearPoly& b) { return a -= b; }
  friend LinearPoly operator*(const PolyD& p, const LinearPoly& l);
  friend LinearPoly operator*(double s, const LinearPoly& l);

  LinearPoly derivative(const std::string& var) const;
  /// Substitutes decision values.
  PolyD evaluate(std::span<const double> decisions) const;
  /// Every monomial any choice of decisions can produce.
  std::vector<Exponents> support() const;
  bool is_zero() const;
  uint32_t total_degree() const;
};

/// Scalar affine form constant + sum_k coeffs[k] d_k.
struct LinearForm {
  double constant = 0.0;
  std::map<size_t, double> coeffs;
  double evaluate(std::span<const double> decisions) const;
};

struct SosConstraint {
  std::string name;
  LinearPoly poly;
  /// Candidate Gram monomials; empty means every monomial within the
  /// degree bounds of the support.
  std::vector<Exponents> basis;
};

/// Feasibility program: find decisions with every equality zero and every
/// listed polynomial a sum of squares in `vars`.
struct SosProgram {
  std::vector<std::string> vars;
  std::vector<std::string> decision_names;
  std::vector<LinearForm> equalities;
  std::vector<SosConstraint> sos;
  double delta = 0.0;
  double radius = 0.0;
  std::vector<std::string> warnings;

  size_t num_decisions() const { return decision_names.size(); }
  size_t add_decision(std::string name);
};

struct CompileOptions {
  size_t gram_cap = 200;
};

struct GramBlockInfo {
  std::string name;
  std::vector<Exponents> basis;
  /// Index into SdpProblem::block_sizes, or npos when the basis is empty.
  size_t block = std::numeric_limits<size_t>::max();
};

struct CompiledSdp {
  SdpProblem sdp;
  std::vector<GramBlockInfo> gram;
  /// Decision k is free variable k.
  size_t num_decisions = 0;
};

/// Monomials of half the constraint's degree that can occur in a Gram
/// representation: per-variable and total degree bounds of the support, then
/// repeated removal of monomials whose square can neither appear in the
/// support nor be produced by two other basis elements.
std::vector<Exponents> gram_basis(const LinearPoly& sigma, size_t nvars,
                                  const std::vector<Exponents>& candidates = {});

/// One Gram block per SOS constraint; one equality per monomial of
/// support(sigma) union Gram products. Throws BasisTooLarge.
CompiledSdp compile_to_sdp(const SosProgram& prog, const CompileOptions& options = {});

struct GramCheck {
  double min_eigenvalue = 0.0;
  /// max over monomials |coef(sigma) - coef(b^T Q b)|.
  double coefficient_error = 0.0;
};

GramCheck check_gram(const SosConstraint& c, const GramBlockInfo& info, const Eigen::MatrixXd& Q,
                     std::span<const double> decisions, const std::vector<std::string>& vars);

}  // namespace phlift
