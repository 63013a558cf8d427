#pragma once

#include "stv/types.hpp"

namespace stv {

// Rotates a body-frame velocity into the world frame. Yaw rate is frame-invariant.
BodyVelocity body_to_world(double theta, const BodyVelocity& v);

// Advances a pose by one RK4 step of p_dot = R(theta) * (vx, vy), theta_dot = omega,
// holding the body velocity constant over the step. Exact for pure rotation.
// dt must be positive and finite.
Pose integrate_pose(const Pose& p, const BodyVelocity& v, double dt);

}  // namespace stv
