#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fdivergence {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedGenerator : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on estimator inputs (sample sizes, finiteness).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// Quadrature ran out of budget; best_estimate holds the last value.
class AccuracyNotReached : public Error {
 public:
  AccuracyNotReached(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate(best_estimate), error_estimate(error_estimate) {}
  double best_estimate;
  double error_estimate;
};

/// The norm-ball constraint cannot be met by any simplex weights.
class InfeasibleConstraint : public Error {
 public:
  InfeasibleConstraint(const std::string& what, double min_attainable_mmd)
      : Error(what), min_attainable_mmd(min_attainable_mmd) {}
  double min_attainable_mmd;
};

/// Malformed numeric text input; line is 1-based (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0) : Error(what), line(line) {}
  long line;
};

class CertificationFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> fields)
      : Error(what), fields(std::move(fields)) {}
  std::vector<std::string> fields;
};

}  // namespace fdivergence
