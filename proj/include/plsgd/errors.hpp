#pragma once

#include <stdexcept>
#include <string>

namespace plsgd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// chain
class NonUniqueStationary : public Error {
 public:
  using Error::Error;
};

class MixingTimeNotFound : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// poisson
class NotCentered : public Error {
 public:
  using Error::Error;
};

// engine
class NonFinite : public Error {
 public:
  NonFinite(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A lemma or theorem hypothesis (e.g. 2*mu*a > 3) does not hold.
class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

// problems
class DisconnectedGraph : public Error {
 public:
  using Error::Error;
};

class UncertifiedModel : public Error {
 public:
  using Error::Error;
};

class DegenerateCovariance : public Error {
 public:
  using Error::Error;
};

// theory
class InfeasibleK0 : public Error {
 public:
  using Error::Error;
};

// harness
class NonPositiveValues : public Error {
 public:
  using Error::Error;
};

class TooFewTrials : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace plsgd
