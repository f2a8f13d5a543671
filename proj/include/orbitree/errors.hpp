#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace orbitree {

// Errors raised while reading the textual automaton format.  `line` is
// 1-based and points at the offending input line.
class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    Syntax,
    MissingTransition,
    DuplicateTransition,
    UnknownSymbol,
    EmptyAlphabet,
    EmptyStateset,
    DuplicateName,
  };

  ParseError(Kind kind, int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        kind_(kind),
        line_(line) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

class NotInvertibleError : public std::runtime_error {
 public:
  explicit NotInvertibleError(const std::string& what)
      : std::runtime_error(what) {}
};

class AlphabetMismatchError : public std::runtime_error {
 public:
  explicit AlphabetMismatchError(const std::string& what)
      : std::runtime_error(what) {}
};

class UnknownStateError : public std::runtime_error {
 public:
  explicit UnknownStateError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised when an exploration would exceed its configured budget.  `explored`
// reports how far the search got, so callers can surface partial evidence.
class BudgetExceededError : public std::runtime_error {
 public:
  BudgetExceededError(const std::string& what, std::uint64_t explored)
      : std::runtime_error(what), explored_(explored) {}

  std::uint64_t explored() const { return explored_; }

 private:
  std::uint64_t explored_;
};

// Raised when a structural invariant that is supposed to hold for the input
// class fails; it signals a bug or an out-of-class input, not a user error.
class InconsistencyError : public std::logic_error {
 public:
  explicit InconsistencyError(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace orbitree
