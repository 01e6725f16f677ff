#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "phlift/expr/expr.h"

namespace phlift {

/// Parses `text` against the declared variable names. Decimal literals become
/// exact rationals. Throws ParseError (with byte offset), UnknownIdentifier or
/// ArityMismatch.
Expr parse(std::string_view text, const std::vector<std::string>& vars);

}  // namespace phlift
