#pragma once

#include <stdexcept>
#include <string>

namespace echoprep {

// Bad input: out-of-range sites, mismatched dimensions, invalid configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative method failed to reach its tolerance. Carries the best residual
// (or error estimate) that was achieved.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace echoprep
