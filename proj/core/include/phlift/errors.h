#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phlift {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(const std::string& name, size_t offset)
      : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ArityMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Division by zero, ln of a non-positive value, or an unassigned variable.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFunction : public Error {
 public:
  using Error::Error;
};

class ClosureDiverged : public Error {
 public:
  using Error::Error;
};

class DenominatorVanishes : public Error {
 public:
  using Error::Error;
};

class RewriteFailure : public Error {
 public:
  using Error::Error;
};

class IdentityFails : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  NonFiniteState(double time)
      : Error("non-finite state at t = " + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class InconsistentMatching : public Error {
 public:
  using Error::Error;
};

class BasisTooLarge : public Error {
 public:
  using Error::Error;
};

class MaxIterations : public Error {
 public:
  using Error::Error;
};

class PortGramSingular : public Error {
 public:
  using Error::Error;
};

}  // namespace phlift
