#pragma once

#include <stdexcept>
#include <string>

namespace rankselect {

/// Malformed or out-of-contract input (non-finite data, bad shapes, bad ranks).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The tail of a spectrum is numerically zero, so the spiked fit at this rank
/// has no positive noise variance.
class DegenerateTailError : public std::runtime_error {
 public:
  DegenerateTailError(int rank, int numerical_rank);
  DegenerateTailError(const std::string& message, int rank, int numerical_rank);

  int rank() const noexcept { return rank_; }
  int numerical_rank() const noexcept { return numerical_rank_; }

 private:
  int rank_;
  int numerical_rank_;
};

/// Argument lies outside the domain of a random-matrix quantity
/// (e.g. inside the bulk support).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative solver failed to converge or to bracket a root.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rankselect
