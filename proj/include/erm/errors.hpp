#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace erm {

// Argument validation failures use std::invalid_argument directly.

/// Input data that cannot be processed (non-finite coordinates, corrupt dumps).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Eigensolver failure; carries the seed of the realization that produced the matrix.
class ComputationError : public std::runtime_error {
public:
  ComputationError(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (realization seed " + std::to_string(seed) + ")"),
        seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

private:
  std::uint64_t seed_;
};

/// A fit that did not converge or had nothing to fit.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace erm
