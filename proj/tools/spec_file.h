#pragma once

#include <string>
#include <utility>
#include <vector>

#include "phlift/errors.h"
#include "phlift/ph/system.h"

namespace phlift::cli {

/// Malformed spec file; the message carries the line number.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Ordered "key = value" lines of a parameter block. Keys may repeat.
struct ParameterBlock {
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;
};

/// Text system description:
///
///   [states]       one "name [lo hi]" per line (domain defaults to [-5, 5])
///   [hamiltonian]  one expression
///   [J], [R]       "i j expr" with 1-based indices; unlisted entries are 0.
///                  J is completed antisymmetrically and explicit mirror
///                  entries must agree.
///   [g]            one port per line, the column entries separated by ','
///   [simulate], [design]  optional "key = value" blocks
///
/// '#' starts a comment.
struct SystemSpecFile {
  PHSystem system;
  ParameterBlock simulate;
  ParameterBlock design;
};

SystemSpecFile parse_spec_file(const std::string& text);
SystemSpecFile load_spec_file(const std::string& path);

/// Comma-separated items at parenthesis depth zero, trimmed.
std::vector<std::string> split_top_level(const std::string& s, char sep = ',');

/// Numeric constant in expression syntax (e.g. "1/2", "1e-3", "-4").
double parse_number(const std::string& s);
Rational parse_rational(const std::string& s);

}  // namespace phlift::cli
