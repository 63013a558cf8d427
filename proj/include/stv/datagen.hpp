#pragma once

#include <cstdint>
#include <vector>

#include "stv/newton_euler.hpp"
#include "stv/params_io.hpp"
#include "stv/trajectory.hpp"

namespace stv {

struct GenConfig {
  // Standard deviation of the additive pose measurement noise (px, py, theta).
  double pose_noise_px = 1e-3;
  double pose_noise_py = 1e-3;
  double pose_noise_theta = 1e-3;
  std::uint64_t seed = 1;
  // Driving arena: the run stays inside |px| <= half_x, |py| <= half_y. A wall
  // hit stops the car, reflects its heading, and flags the sample so fitting
  // code skips the discontinuity. Set bounce=false for an unbounded plane.
  bool bounce = true;
  double half_x = 6.0;
  double half_y = 3.5;
};

// Renders a profile to per-sample driver commands at the sample rate. Steering
// commands are clamped to the servo travel and motor commands to [-1, 1];
// noise signals draw from `seed` deterministically.
std::vector<DriverInput> render_profile(const ExcitationProfile& profile, std::uint64_t seed,
                                        double delta_max = 2.012);

// Integrates the full vehicle model over the command sequence starting at rest
// with the steering centered. Poses carry the measurement noise; velocities
// and the kinematic labels (tire speed, slip angles, steering angle) come from
// the noise-free state.
Trajectory simulate_vehicle(const std::vector<DriverInput>& inputs, const VehicleParams& p,
                            const GenConfig& cfg);

}  // namespace stv
