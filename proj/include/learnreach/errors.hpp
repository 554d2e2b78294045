#pragma once

#include <stdexcept>
#include <string>

namespace learnreach {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Query and model disagree (e.g. different observation periods).
class InconsistentSpec : public Error {
 public:
  using Error::Error;
};

// Policy extraction needs per-step slices that were not retained.
class StaleSolution : public Error {
 public:
  using Error::Error;
};

class IOError : public Error {
 public:
  using Error::Error;
};

// A TTL needed by a query is not reached within the horizon.
class UnreachableWithinHorizon : public Error {
 public:
  using Error::Error;
};

// Invalid configuration. `field` names the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace learnreach
