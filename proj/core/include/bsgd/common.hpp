#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// All sampling goes through this engine type so traces are reproducible
// for a fixed seed on a given standard library.
using Engine = std::mt19937_64;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an operation needs a capability the problem does not provide
// (no reference objective, missing theorem constants, wrong problem type).
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace bsgd
