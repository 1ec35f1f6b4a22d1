#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cooc {

// Base of every exception thrown by the core. The C API maps each subclass to
// a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: a bad code string, an unparsable line, a bad flag value.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A code string that fails validation; position is 0-based.
class CodeError : public ParseError {
 public:
  CodeError(const std::string& what, std::size_t position)
      : ParseError(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Well-formed input that violates a semantic precondition.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatVersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cooc
