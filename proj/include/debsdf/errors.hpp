#pragma once

#include <stdexcept>
#include <string>

namespace debsdf {

// Argument outside the mathematical domain of an operation (beta <= 0, U below floor, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Configuration text that does not parse. `where` carries "line N" or a JSON pointer.
struct ParseError : std::runtime_error {
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), location(where) {}
  std::string location;
};

// Well-formed input that violates a documented constraint.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Gradient undefined at the query point (sphere center, box medial axis).
struct SingularPointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query inside a union blend zone where no single primitive owns the point.
struct UnsupportedRegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-deficient or geometrically degenerate input.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LengthMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite value where a finite one is required; names the offending term.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace debsdf
