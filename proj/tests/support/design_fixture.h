#pragma once

#include <vector>

#include "example_systems.h"
#include "phlift/sos/design.h"

namespace phlift::testing {

/// Exponential-damping example regulated to x = (0, 4).
inline DesignSpec design_example_spec(double radius, int omega_degree = 4) {
  DesignSpec spec = make_design_spec(lift(design_example()), {0.0, 4.0});
  spec.radius = radius;
  spec.omega_degree = omega_degree;
  return spec;
}

/// c xbar1^2 xbar3 plus omega over xbar2..xbar4.
inline HdTemplate fixed_term_template(const DesignSpec& spec, int omega_degree) {
  const auto& v = spec.lifted.vars;
  Exponents e(v.size(), 0);
  e[0] = 2;
  e[2] = 1;
  HdTemplate t;
  t.fixed_terms = {Poly::monomial(Rational(1), e, v)};
  t.omega_vars = {v[1], v[2], v[3]};
  t.omega_degree = omega_degree;
  return t;
}

/// Base points at distance <= 2 from (0, 4), none on the line x2 = 4.
inline std::vector<std::vector<double>> closed_loop_base_points() {
  return {{1.0, 5.0}, {-1.0, 3.0}, {1.4, 2.6}, {-1.4, 5.4}};
}

}  // namespace phlift::testing
