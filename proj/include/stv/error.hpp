#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stv {

// Base of every error the toolchain reports as a tool failure.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

// Free variable in a program that must be closed.
class ScopeError : public Error {
public:
  using Error::Error;
};

// Primitive used in the wrong language, or source/target mismatch on plug.
class LanguageError : public Error {
public:
  using Error::Error;
};

// Zero or several holes where exactly one is expected.
class HoleError : public Error {
public:
  using Error::Error;
};

// Failure of the type-and-effect inference.
class TypeError : public Error {
public:
  using Error::Error;
};

// Dynamic failure of the interpreters.
class RuntimeError : public Error {
public:
  using Error::Error;
};

// An action outside the alphabet an automaton was built over.
class AlphabetError : public Error {
public:
  using Error::Error;
};

class UsageError : public Error {
public:
  using Error::Error;
};

} // namespace stv
