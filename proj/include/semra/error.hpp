#pragma once

#include <stdexcept>
#include <string>

namespace semra {

/// Input violates a documented invariant (ranges, lengths, dimensions).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Corpus or fixture document does not match its schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hypothesis an operation relies on does not hold for the given input.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iteration produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace semra
