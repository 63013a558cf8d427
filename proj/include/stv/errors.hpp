#pragma once

#include <stdexcept>
#include <string>

namespace stv {

// Numeric failure inside a simulation or fitting loop (guard trips, NaN loss,
// covariance loss of positive definiteness). Carries the step index when known.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace stv
