#pragma once

#include <string>
#include <vector>

#include "phlift/ph/system.h"

namespace phlift {

/// Plain-data view of a lifted system as stored on disk.
struct LiftedFile {
  std::vector<std::string> states;
  std::vector<std::string> vars;
  /// Defining expression of each extended variable, in the original states.
  std::vector<Expr> definitions;
  RatFn hamiltonian;
  std::vector<Poly> gradient;
  PolyMatrix Jscript, Rscript;
  std::vector<std::vector<Poly>> ports;
  std::string manifest;
};

LiftedFile to_lifted_file(const LiftedPHSystem& lifted, const std::string& manifest_ref);

/// Sections [states], [variables], [hamiltonian], [gradient], [Jscript],
/// [Rscript], [ports], [manifest]. Matrix sections list the nonzero entries as
/// "i j expr" with 1-based indices.
std::string lifted_to_string(const LiftedFile& file);
LiftedFile lifted_from_string(const std::string& text);

}  // namespace phlift
