#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phlift/expr/expr.h"

namespace phlift {

/// Per-variable interval of the working domain.
struct DomainBox {
  std::vector<std::pair<double, double>> bounds;

  static DomainBox uniform(size_t n, double lo = -5.0, double hi = 5.0) {
    return DomainBox{std::vector<std::pair<double, double>>(n, {lo, hi})};
  }
};

/// One lifted coordinate psi(x). Reciprocal coordinates w = 1/b(xbar) also
/// carry the denominator they invert.
struct LiftCoordinate {
  std::string name;
  /// Expression in the original variables.
  Expr defining_expr;
  /// d psi / d x_j for each original variable, in the extended variables.
  std::vector<RatFn> derivative_table;
  /// For reciprocal coordinates: b in the extended variables.
  std::optional<Poly> reciprocal_of;

  bool is_reciprocal() const { return reciprocal_of.has_value(); }
};

/// A registered denominator b with its reciprocal variable.
struct RegistryEntry {
  Poly denominator;
  std::string name;
  /// d w / d xbar_k = -(d b / d xbar_k) * w^2, one entry per extended variable
  /// known at registration time.
  std::vector<Poly> derivative_table;
};

struct DenominatorRegistry {
  std::vector<RegistryEntry> entries;
  bool empty() const { return entries.empty(); }
};

/// Lifted immersion xbar = [x; psi_1(x); ...; psi_r(x)]. The extended state
/// variables are named xbar1..xbarN, the first n standing for x itself.
class Immersion {
 public:
  Immersion() = default;
  explicit Immersion(std::vector<std::string> original_vars);

  const std::vector<std::string>& original_vars() const { return original_; }
  size_t num_original() const { return original_.size(); }
  const std::vector<LiftCoordinate>& coords() const { return coords_; }
  std::vector<LiftCoordinate>& mutable_coords() { return coords_; }
  size_t dimension() const { return original_.size() + coords_.size(); }

  const DenominatorRegistry& registry() const { return registry_; }
  DenominatorRegistry& mutable_registry() { return registry_; }

  /// xbar1..xbarN.
  std::vector<std::string> extended_vars() const;
  static std::string extended_name(size_t index);  // 0-based

  /// Maps original variables to their xbar names and primitive coordinates'
  /// defining expressions to their names.
  GeneratorMap generators() const;

  /// Rewrites an expression in original variables into the extended
  /// variables. Throws RewriteFailure when a primitive has no coordinate.
  RatFn rewrite(const Expr& e, const std::string& what = "expression") const;

  /// The r x n block P = d psi / d x.
  std::vector<std::vector<RatFn>> jacobian_P() const;

  /// Entry (k, j) of [I_n; P].
  RatFn p_bar(size_t k, size_t j) const;

  /// Extended point Psi_bar(x).
  std::vector<double> evaluate(std::span<const double> x) const;

  /// Defining expression of extended coordinate k in the original variables.
  Expr coordinate_expr(size_t k) const;

  /// Recomputes every derivative table of a primitive coordinate from its
  /// defining expression.
  void rebuild_tables();

  void append(LiftCoordinate c) { coords_.push_back(std::move(c)); }

 private:
  std::vector<std::string> original_;
  std::vector<LiftCoordinate> coords_;
  DenominatorRegistry registry_;
};

/// Distinct primitive calls occurring in `exprs`, in first-occurrence order
/// (depth first, left to right). Throws UnsupportedFunction on a primitive
/// whose argument is not a polynomial.
std::vector<Expr> collect_primitives(const std::vector<Expr>& exprs);

struct ClosureOptions {
  size_t max_coordinates = 32;
};

/// Builds coordinates for `primitives` and closes them under
/// differentiation. sin/cos are always added as a pair. Throws
/// ClosureDiverged past the coordinate bound.
Immersion compute_closure(const std::vector<std::string>& original_vars,
                          const std::vector<Expr>& primitives,
                          const ClosureOptions& options = {});

/// Builds an immersion from explicit coordinate expressions (which may be
/// redundant); tables are filled where the rewrite succeeds.
Immersion immersion_from_coordinates(const std::vector<std::string>& original_vars,
                                     const std::vector<Expr>& coordinates);

/// Drops coordinates that are polynomial in x (including copies of states),
/// exact duplicates, and beta * other^nu. Renumbers and rebuilds tables.
Immersion eliminate_redundancy(const Immersion& imm);

struct ExtensionOptions {
  size_t samples = 10000;
  uint64_t seed = 0x5eed;
  size_t max_reciprocals = 32;
};

/// Rewrites `entries` (over the extended variables of `imm`) as polynomials by
/// registering reciprocal coordinates w = 1/b for their denominators. The
/// immersion's own derivative tables are made polynomial too, and the
/// reciprocal coordinates are appended to `imm`. Throws DenominatorVanishes
/// when sampling the box finds a zero of some b.
std::vector<Poly> polynomial_extension(const std::vector<RatFn>& entries,
                                       Immersion& imm, const DomainBox& box,
                                       const ExtensionOptions& options = {});

/// Latin-hypercube samples of the box, deterministic in `seed`.
std::vector<std::vector<double>> latin_hypercube(const DomainBox& box,
                                                 size_t samples, uint64_t seed);

/// Text form: one block per coordinate with its derivative table.
std::string manifest_to_string(const Immersion& imm);
Immersion manifest_from_string(const std::string& text);

}  // namespace phlift
