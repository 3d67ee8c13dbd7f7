#pragma once

#include <stdexcept>
#include <string>

namespace hpmval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while parsing a group file, config file or metric formula.
// line/column are 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, int line = 0, int column = 0)
      : Error(format(msg, line, column)), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& msg, int line, int column) {
    if (line <= 0) return msg;
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + msg;
  }

  int line_;
  int column_;
};

// Runtime evaluation failure (missing identifier, division by zero).
class EvalError : public Error {
 public:
  using Error::Error;
};

// The selected backend cannot serve the request on this host.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Counter session misuse or OS-level failure.
class SessionError : public Error {
 public:
  using Error::Error;
};

}  // namespace hpmval
