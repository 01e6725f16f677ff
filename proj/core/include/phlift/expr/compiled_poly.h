#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phlift/expr/polynomial.h"

namespace phlift {

/// Double-precision polynomial flattened for fast repeated evaluation
/// against a fixed variable ordering.
class CompiledPoly {
 public:
  CompiledPoly() = default;
  template <typename C>
  CompiledPoly(const Polynomial<C>& p, const std::vector<std::string>& vars) {
    const auto q = p.with_variables(vars);
    for (const auto& [e, c] : q.terms()) {
      Term t{to_double(c), {}};
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] > 0) t.factors.emplace_back(static_cast<uint32_t>(i), e[i]);
      }
      terms_.push_back(std::move(t));
    }
  }

  bool is_zero() const { return terms_.empty(); }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (const auto& [i, k] : t.factors) {
        const double xi = x[i];
        for (uint32_t r = 0; r < k; ++r) v *= xi;
      }
      s += v;
    }
    return s;
  }

 private:
  struct Term {
    double coef;
    std::vector<std::pair<uint32_t, uint32_t>> factors;
  };
  std::vector<Term> terms_;
};

}  // namespace phlift
