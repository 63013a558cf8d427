#include "stv/frames.hpp"

#include <cmath>
#include <stdexcept>

namespace stv {

BodyVelocity body_to_world(double theta, const BodyVelocity& v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.vx - s * v.vy, s * v.vx + c * v.vy, v.omega};
}

Pose integrate_pose(const Pose& p, const BodyVelocity& v, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("integrate_pose: dt must be positive and finite");
  }
  auto deriv = [&v](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return Pose{c * v.vx - s * v.vy, s * v.vx + c * v.vy, v.omega};
  };
  const Pose k1 = deriv(p.theta);
  const Pose k2 = deriv(p.theta + 0.5 * dt * k1.theta);
  const Pose k3 = deriv(p.theta + 0.5 * dt * k2.theta);
  const Pose k4 = deriv(p.theta + dt * k3.theta);
  return Pose{
      p.px + dt / 6.0 * (k1.px + 2.0 * k2.px + 2.0 * k3.px + k4.px),
      p.py + dt / 6.0 * (k1.py + 2.0 * k2.py + 2.0 * k3.py + k4.py),
      p.theta + dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
  };
}

}  // namespace stv
