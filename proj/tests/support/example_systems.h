#pragma once

#include <random>
#include <string>
#include <vector>

#include "phlift/expr/parser.h"
#include "phlift/ph/system.h"
#include "phlift/sim/simulate.h"

namespace phlift::testing {

inline std::vector<std::string> state_names(size_t n) {
  std::vector<std::string> v;
  for (size_t i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

inline ExprMatrix zeros(size_t n) { return ExprMatrix(n, std::vector<Expr>(n)); }

/// Two states, quadratic energy, damping exp(x_i), one port along (1, 1).
inline PHSystem exponential_example() {
  PHSystem s;
  s.states = state_names(2);
  auto p = [&](const char* t) { return parse(t, s.states); };
  s.hamiltonian = p("(1/2)*(x1^2 + x2^2)");
  s.J = {{Expr(0), Expr(1)}, {Expr(-1), Expr(0)}};
  s.R = {{p("exp(x1)"), Expr(0)}, {Expr(0), p("exp(x2)")}};
  s.g = {{Expr(1), Expr(1)}};
  s.domain = DomainBox::uniform(2);
  return s;
}

/// Same damping without interconnection, actuated on x2 only.
inline PHSystem design_example() {
  PHSystem s = exponential_example();
  s.J = zeros(2);
  s.g = {{Expr(0), Expr(1)}};
  return s;
}

/// Rolling coin on a plane; all constants one.
inline PHSystem rolling_coin() {
  PHSystem s;
  s.states = state_names(6);
  auto p = [&](const char* t) { return parse(t, s.states); };
  s.hamiltonian = p("1/2*x5^2 + 1/4*x6^2");
  s.J = zeros(6);
  const Expr c = p("cos(x4)"), sn = p("sin(x4)");
  s.J[0][5] = c;
  s.J[1][5] = sn;
  s.J[2][5] = Expr(1);
  s.J[3][4] = Expr(1);
  s.J[4][3] = Expr(-1);
  s.J[5][0] = -c;
  s.J[5][1] = -sn;
  s.J[5][2] = Expr(-1);
  s.R = zeros(6);
  std::vector<Expr> g1(6), g2(6);
  g1[5] = Expr(1);
  g2[4] = Expr(1);
  s.g = {g1, g2};
  s.domain = DomainBox::uniform(6);
  return s;
}

/// Oscillator with logarithmic and rational damping.
inline PHSystem log_example() {
  PHSystem s;
  s.states = state_names(2);
  auto p = [&](const char* t) { return parse(t, s.states); };
  s.hamiltonian = p("(1/2)*(x1^2 + x2^2)");
  s.J = {{Expr(0), Expr(1)}, {Expr(-1), Expr(0)}};
  s.R = {{p("ln(1 + x1^2)"), Expr(0)}, {Expr(0), p("1/(1 + x2^2)")}};
  s.g = {{Expr(0), Expr(1)}};
  s.domain = DomainBox::uniform(2);
  return s;
}

struct SeededRun {
  InputSignal input;
  std::vector<double> x0;
};

/// Single-port sinusoid a sin(w t) with a in [1/4, 3/4], w in [1, 3] and
/// x0 in [-1/2, 1/2]^2, drawn from seed.
inline SeededRun seeded_run(unsigned seed) {
  std::mt19937_64 rng(100 + seed);
  std::uniform_real_distribution<double> amp(0.25, 0.75), omega(1.0, 3.0), x(-0.5, 0.5);
  const double a = amp(rng), w = omega(rng);
  std::vector<double> x0{x(rng), x(rng)};
  return {InputSignal::sinusoid({a}, {w}), x0};
}

}  // namespace phlift::testing
