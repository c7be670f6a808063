#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fe {

// Base for every error the library raises. Subclasses map onto the CLI exit
// codes (see tools/): usage 1, I/O and parse 2, contract violation 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A named column is absent or a schema is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed. `line` is 1-based when known, 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Duplicate (id, date) keys or other violations of frame invariants.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

// A factor body reached for a column it did not declare.
class DefinitionError : public Error {
 public:
  using Error::Error;
};

// A factor body produced output that breaks the (id, date, value) contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Unknown factor name.
class LookupError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyUniverseError : public Error {
 public:
  using Error::Error;
};

}  // namespace fe
