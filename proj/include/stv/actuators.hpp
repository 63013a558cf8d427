#pragma once

namespace stv {

// First-order steering servo with a slew-rate limit. delta_max bounds both the
// command and the achievable angle; rate_max is the hard slew limit; tau is the
// first-order time constant.
struct SteeringParams {
  double delta_max = 2.012;  // rad
  double rate_max = 1.418;   // rad/s
  double tau = 0.155;        // s
};

// Proportional drive motor with a resistive brake. Positive commands track the
// velocity reference um * c_ref with gain k_t, clamped to +-f_max; non-positive
// commands brake proportionally to wheel speed with gain k_b (unclamped).
struct MotorParams {
  double f_max = 423.4;  // N
  double k_t = 274.8;    // N s/m
  double c_ref = 2.033;  // m/s
  double k_b = 597.0;    // N s/m
};

// Servo angular rate at the current angle for command us:
//   rate = clamp((us - delta)/tau, +-rate_max).
// Both |delta| and |us| must stay within delta_max.
double steering_rate(double delta, double us, const SteeringParams& p);

// Exact update of the servo ODE over dt: a saturated-slew phase (if the error
// exceeds rate_max * tau) followed by an exponential approach. Never overshoots
// the command and never exceeds the slew limit.
double steer_step(double delta, double us, double dt, const SteeringParams& p);

// Longitudinal force at the front wheel for command um in [-1, 1] and wheel
// longitudinal speed v_fx. The throttle branch is clamped to +-f_max; the brake
// branch always opposes wheel motion.
double motor_force(double um, double v_fx, const MotorParams& p);

}  // namespace stv
