#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperkb {

/// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of the model would be broken by the operation.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Raised by bulk_load and journal replay. `line` is 1-based, 0 when the
/// failure is not tied to a single input line.
class LoadError : public Error {
 public:
  LoadError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperkb
