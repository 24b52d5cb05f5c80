#pragma once

#include <stdexcept>
#include <string>

namespace fracpme {

// Base for all library errors. The CLI maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (bad order, wrong topology, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Step controller gave up, or a result came out non-finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw PreconditionError(msg);
}

}  // namespace fracpme
