#pragma once

#include <cmath>

namespace stv {

// Sample period of every trajectory in this toolkit (10 Hz).
inline constexpr double kSamplePeriod = 0.1;

// Planar pose in the world frame. theta is stored unwrapped so headings can
// accumulate across full revolutions.
struct Pose {
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
};

// Body-frame velocity at the center of gravity: longitudinal, lateral, yaw rate.
struct BodyVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
};

// Driver command pair: steering target [rad] and normalized motor command in [-1, 1].
struct DriverInput {
  double us = 0.0;
  double um = 0.0;
};

// State of the kinematic vehicle family: front-wheel speed (>= 0), front/rear
// slip angles in (-pi/2, pi/2), and the actual steering angle.
struct KinematicState {
  double vf = 0.0;
  double alpha_f = 0.0;
  double alpha_r = 0.0;
  double delta = 0.0;
};

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace stv
