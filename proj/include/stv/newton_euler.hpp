#pragma once

#include "stv/actuators.hpp"
#include "stv/types.hpp"

namespace stv {

// Piecewise-linear lateral tire with saturation plus a polynomial rolling drag
// at the driven front wheel. v0 floors the slip-angle denominator so the slip
// stays defined through standstill.
struct TireParams {
  double c_alpha_f = 3594.0;  // N/rad
  double c_alpha_r = 7840.0;  // N/rad
  double f_max_f = 629.6;     // N
  double f_max_r = 1360.0;    // N
  double r1 = 43.40;          // N s/m
  double r2 = -15.61;         // N (s/m)^2
  double v0 = 0.1;            // m/s
};

// Full parameter set of the planar two-wheel (single-track) rigid-body model.
// `legacy_tire_frame` switches the front-wheel transform to a historical
// symmetric variant (+sin(delta)*vx in the lateral velocity and +sin(delta)*F_lat
// in the longitudinal force); both variants are energy-consistent pairs.
struct VehicleParams {
  SteeringParams steering;
  MotorParams motor;
  TireParams tire;
  double mass = 319.6;      // kg
  double inertia_z = 90.85; // kg m^2
  double l_f = 0.54;        // m
  double l_r = 0.33;        // m
  bool legacy_tire_frame = false;
};

// Dynamic state advanced by the rigid-body model: body velocity plus the
// actual steering angle (integrated in lockstep with the velocities).
struct NeState {
  BodyVelocity v;
  double delta = 0.0;
};

struct TireVelocities {
  double vfx = 0.0, vfy = 0.0;  // front wheel frame
  double vrx = 0.0, vry = 0.0;  // rear wheel frame (no rear steering)
};

struct PlanarForces {
  double fx = 0.0, fy = 0.0, mz = 0.0;
};

// Wheel-frame contact-point velocities for the current steering angle.
TireVelocities tire_velocities(const BodyVelocity& v, double delta, const VehicleParams& p);

// Slip angle with the regularized denominator: atan(v_iy / max(|v_ix|, v0)).
double slip_angle(double v_ix, double v_iy, double v0);

// Lateral force: -c_alpha * alpha inside the linear range, saturated at +-f_max.
// Continuous at the breakpoint alpha = f_max / c_alpha.
double lateral_tire_force(double alpha, double c_alpha, double f_max);

// Front-wheel rolling drag r1 * v_fx + r2 * v_fx^2. Opposes motion for
// |v_fx| < r1/|r2| with the default parameters.
double drag_force(double v_fx, const TireParams& p);

// Maps wheel-frame forces into body-frame net force and yaw moment.
PlanarForces force_balance(double delta, double f_alpha_f, double f_alpha_r, double f_motor,
                           double f_drag, const VehicleParams& p);

// Time derivative of (vx, vy, omega, delta) under constant driver input,
// including the Coriolis terms of the body frame.
NeState ne_derivative(const NeState& x, const DriverInput& u, const VehicleParams& p);

// One 0.1 s sample step: two RK4 substeps of 0.05 s with the input held
// constant. Any stage derivative with magnitude above 1e6 aborts with
// NumericError: the state has left the region the discretization can handle.
NeState ne_step(const NeState& x, const DriverInput& u, const VehicleParams& p);

// Kinetic energy of the planar rigid body; the coast-dissipativity checks
// monitor this quantity.
double kinetic_energy(const BodyVelocity& v, const VehicleParams& p);

}  // namespace stv
