#pragma once

// Exception taxonomy. Every failure the library can diagnose maps to one of
// these types so callers (and the CLI's exit-code policy) can distinguish
// input validation problems from numerical ones.

#include <stdexcept>
#include <string>

namespace sgdsde {

// Root of all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- input / validation failures -------------------------------------------

class NonSymmetric : public Error {
 public:
  using Error::Error;
};

class NotPSD : public Error {
 public:
  using Error::Error;
};

class LogOfZero : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NegativeVariance : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class WrongShape : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientPoints : public Error {
 public:
  using Error::Error;
};

// --- numerical / model failures --------------------------------------------

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class PrecisionLoss : public Error {
 public:
  using Error::Error;
};

// Some stepsize-eigenvalue product hits the removable pole eta*lambda == 1,
// where the drift coefficient log(1 - eta*lambda) is undefined.
class SingularStepsize : public Error {
 public:
  using Error::Error;
};

class NotWellPosed : public Error {
 public:
  using Error::Error;
};

class NonOrthogonalBasis : public Error {
 public:
  using Error::Error;
};

class MatchConditionsViolated : public Error {
 public:
  using Error::Error;
};

class DegenerateDiffusion : public Error {
 public:
  using Error::Error;
};

class BelowNoiseFloor : public Error {
 public:
  using Error::Error;
};

}  // namespace sgdsde
