#pragma once

#include <stdexcept>
#include <string>

namespace qroute {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A topology or snapshot violates a structural invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// A document could not be parsed. `locus` names the offending line or field.
class ParseError : public Error {
 public:
  ParseError(std::string locus, const std::string& what)
      : Error(locus + ": " + what), locus_(std::move(locus)) {}

  const std::string& locus() const noexcept { return locus_; }

 private:
  std::string locus_;
};

// An instance is too large for an exhaustive routine.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied arguments (flags, sweep syntax, config values).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qroute
