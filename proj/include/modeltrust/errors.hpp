#pragma once

#include <stdexcept>
#include <string>

namespace modeltrust {

// Base for every error the library raises. Verification routines never throw
// on untrusted input; they return verdicts instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid construction parameter (sigma <= 0, chunk size not a power of two,
// index out of range, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Metric outside the domain of a mapping function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// LSRI profile violates its invariants (weights do not sum to one, ...).
class ProfileError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Statement or metadata content that cannot be canonically encoded.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class KeyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content (policy, profile, key, proof). Carries the offending
// line when the failure is syntactic and the field name when it is semantic.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, std::string field = {})
      : Error(what), line_(line), field_(std::move(field)) {}

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace modeltrust
