#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace felce {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

// Effective training data is zero while the error exponent is positive.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class GammaZero : public Error {
 public:
  GammaZero() : Error("gamma must be nonzero") {}
};

// A CE probability p_j fell outside [0,1] beyond tolerance.
class InfeasiblePoint : public Error {
 public:
  InfeasiblePoint(std::size_t index, double value);

  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t index_;
  double value_;
};

// No gamma makes the CE vector a valid probability vector for this chi.
class InfeasibleChi : public Error {
 public:
  explicit InfeasibleChi(double chi);

  double chi() const noexcept { return chi_; }

 private:
  double chi_;
};

// The chain has more than one closed communicating class.
class NonErgodic : public Error {
 public:
  explicit NonErgodic(std::size_t closed_classes);

  std::size_t closed_classes() const noexcept { return closed_classes_; }

 private:
  std::size_t closed_classes_;
};

class NonPositivePayoff : public Error {
 public:
  using Error::Error;
};

class RejectionBudgetExceeded : public Error {
 public:
  explicit RejectionBudgetExceeded(std::size_t draws);

  std::size_t draws() const noexcept { return draws_; }

 private:
  std::size_t draws_;
};

}  // namespace felce
