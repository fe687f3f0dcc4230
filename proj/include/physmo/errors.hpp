#pragma once

#include <stdexcept>
#include <string>

namespace physmo {

/// Bad input: shapes, ranges, malformed files, broken invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular factorization, divergence, integration blow-up.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace physmo
