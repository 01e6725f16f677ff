#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phlift/expr/compiled_poly.h"
#include "phlift/ph/system.h"
#include "phlift/sim/simulate.h"
#include "phlift/sos/sdp.h"
#include "phlift/sos/sos_program.h"

namespace phlift {

/// IDA-PBC design problem on a lifted polynomial system with constant
/// desired interconnection J_d and damping R_d = r I.
struct DesignSpec {
  LiftedPHSystem lifted;
  /// N x N; empty means zero.
  std::vector<std::vector<Rational>> Jd;
  Rational r{1};
  /// Rows of the left annihilator, each of length N.
  std::vector<std::vector<Poly>> annihilator;
  /// Base setpoint x^d and its image xbar^d.
  std::vector<double> base_setpoint;
  std::vector<double> setpoint;
  int omega_degree = 4;
  double radius = 5.0;
  double delta = 1e-3;
  int multiplier_degree = 3;
  int taylor_order = 3;
};

/// Defaults: J_d = 0, r = 1, unit annihilator rows e_k (k < n) for every
/// base coordinate no port actuates, setpoint = Psi_bar(x^d).
DesignSpec make_design_spec(LiftedPHSystem lifted, std::vector<double> base_setpoint);

/// Throws Error when an annihilator row fails lambda_perp . lambda_i = 0
/// symbolically or the setpoint is off the immersion manifold.
void check_design_spec(const DesignSpec& spec);

/// H_d = sum_i c_i fixed_terms[i] + omega, omega a generic polynomial of
/// degree omega_degree in omega_vars (all lifted variables when empty).
struct HdTemplate {
  std::vector<Poly> fixed_terms;
  std::vector<std::string> omega_vars;
  int omega_degree = 4;
};

HdTemplate default_template(const DesignSpec& spec);

/// sum_k coeffs[k] a_k = rhs.
struct MatchingEquation {
  std::map<size_t, Rational> coeffs;
  Rational rhs;
};

struct MatchingResult {
  std::vector<std::string> coefficient_names;
  /// Monomial multiplying each coefficient, in the lifted variables.
  std::vector<Poly> shapes;
  /// One equation per residual monomial.
  std::vector<MatchingEquation> equations;
  /// Coefficients the equations determine uniquely.
  std::vector<std::optional<Rational>> pinned;
  /// H_d = particular + sum_j t_j free_basis[j].
  Poly particular;
  std::vector<Poly> free_basis;

  /// Pinned value of fixed_terms[i] (template order).
  std::optional<Rational> fixed_coefficient(size_t i) const;
};

/// Exact matching equations lambda_perp[(J - R) grad H - (J_d - R_d) grad H_d]
/// = 0. Throws InconsistentMatching when they have no solution.
MatchingResult matching_constraints(const DesignSpec& spec, const HdTemplate& hd);

/// Matched family in shifted coordinates z = xbar - xbar^d (variables
/// z1..zN): H_d = particular + sum_j t_j basis[j].
struct HdFamily {
  std::vector<std::string> vars;
  PolyD particular;
  std::vector<PolyD> basis;
  std::vector<std::string> names;
};

/// Same equations solved in z with double arithmetic, omega expanded in
/// shifted monomials. Throws InconsistentMatching.
HdFamily matched_family(const DesignSpec& spec, const HdTemplate& hd);

struct DesignProgram {
  SosProgram program;
  /// Decision index of each family parameter.
  std::vector<size_t> family_decisions;
  /// Manifold surrogates mu_1.. (coordinate xbar_{n+k} minus its Taylor
  /// polynomial) and the ball function mu_0, all in z.
  PolyD mu0;
  std::vector<PolyD> surrogates;
  std::vector<std::string> z_vars, nu_vars;
};

/// Stationarity (N equations), zero value (1), the localized convexity
/// constraint and s_0 as SOS constraints, s_1.. as free multipliers.
DesignProgram build_sos_program(const DesignSpec& spec, const HdFamily& family);

struct DesignOptions {
  CompileOptions compile;
  SdpOptions sdp;
  /// After the feasibility solve, minimize the trace of the convexity Gram
  /// block (keeps the curvature of H_d, and the closed loop's stiffness, low).
  bool minimize_trace = false;
  size_t hessian_samples = 1000;
  uint64_t seed = 7;
};

struct DesignResult {
  MatchingResult matching;
  HdFamily family;
  DesignProgram program;
  CompiledSdp compiled;
  SdpSolution solution;
  bool feasible = false;

  /// Solved H_d over z1..zN and over xbar1..xbarN.
  PolyD hd_shifted;
  PolyD hd;
  double hd_at_setpoint = 0.0;
  double gradient_norm_at_setpoint = 0.0;
  std::vector<GramCheck> gram_checks;
  double equality_residual = 0.0;
  double matching_residual = 0.0;
  /// Smallest Hessian eigenvalue over sampled points of the localized region.
  double hessian_min_eigenvalue = 0.0;
};

/// Matching, program assembly, compilation, solve and checks. An infeasible
/// SDP is reported through `feasible` and `solution`, not thrown.
DesignResult design(const DesignSpec& spec, const HdTemplate& hd, const DesignOptions& options = {});

/// Minimum Hessian eigenvalue of `hd_shifted` at `samples` points of the
/// ball intersected with the Taylor surrogate manifold (base components
/// sampled, lifted components set from the surrogates).
double sampled_hessian_min_eigenvalue(const DesignSpec& spec, const DesignProgram& prog,
                                      const PolyD& hd_shifted, size_t samples, uint64_t seed);

/// u = (Lambda^T Lambda)^{-1} Lambda^T (F_d grad H_d - F grad H) with the
/// ports stacked as columns of Lambda.
class Controller {
 public:
  Controller() = default;
  /// `hd_shifted` over z1..zN.
  Controller(const DesignSpec& spec, const PolyD& hd_shifted);

  size_t inputs() const { return m_; }
  /// Throws PortGramSingular when the port Gram matrix has an eigenvalue
  /// below 1e-10.
  std::vector<double> operator()(std::span<const double> xbar) const;
  void evaluate(std::span<const double> xbar, std::span<double> u) const;

  /// For a single port: u = numerator / denominator over xbar.
  std::optional<std::pair<PolyD, Poly>> rational_form() const;

 private:
  size_t N_ = 0, m_ = 0;
  std::vector<double> setpoint_;
  std::vector<CompiledPoly> open_loop_;  // F grad H over xbar
  std::vector<CompiledPoly> desired_;    // F_d grad H_d over z
  std::vector<std::vector<CompiledPoly>> ports_;
  std::vector<PolyD> residual_xbar_;
  std::vector<std::vector<Poly>> port_polys_;
};

Controller extract_controller(const DesignSpec& spec, const PolyD& hd_shifted);

struct ClosedLoopOptions {
  double t_end = 20.0;
  double step = 1e-3;
  double monotone_tolerance = 1e-8;
};

struct ClosedLoopRun {
  std::vector<double> initial_state;
  double final_distance = 0.0;
  double hd_final = 0.0;
  /// Largest H_d(t_{k+1}) - H_d(t_k).
  double max_increase = 0.0;
  size_t monotone_violations = 0;
  /// max_t || xbar - Psi_bar(xbar_{1:n}) ||_inf.
  double manifold_drift = 0.0;
  /// Integration error message; distances are infinite when set.
  std::string failure;
  /// H column holds H_d.
  Trajectory trajectory;
};

struct ClosedLoopReport {
  std::vector<ClosedLoopRun> runs;
  bool converged(double distance_tol) const;
  bool monotone() const;
};

/// Lifted initial states Psi_bar(x0) for base points.
std::vector<std::vector<double>> manifold_initial_states(const DesignSpec& spec,
                                                         const std::vector<std::vector<double>>& base);

/// Runs the closed loop from each lifted initial state, one task per run.
ClosedLoopReport closed_loop_validate(const DesignSpec& spec, const Controller& controller,
                                      const PolyD& hd_shifted,
                                      const std::vector<std::vector<double>>& initial_states,
                                      const ClosedLoopOptions& options = {});

/// Structured text report; coefficients with 17 significant digits.
void write_design_report(std::ostream& os, const DesignSpec& spec, const DesignResult& result,
                         const ClosedLoopReport* loop);

/// monomial,coefficient rows of H_d over xbar.
void write_hd_csv(std::ostream& os, const DesignResult& result);

}  // namespace phlift
