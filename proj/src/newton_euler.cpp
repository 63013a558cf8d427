#include "stv/newton_euler.hpp"

#include <cmath>
#include <stdexcept>

#include "stv/errors.hpp"

namespace stv {

namespace {
constexpr double kDerivativeGuard = 1e6;
}

TireVelocities tire_velocities(const BodyVelocity& v, double delta, const VehicleParams& p) {
  const double c = std::cos(delta), s = std::sin(delta);
  const double v_front_lat = v.vy + p.l_f * v.omega;
  TireVelocities out;
  out.vfx = c * v.vx + s * v_front_lat;
  out.vfy = p.legacy_tire_frame ? s * v.vx + c * v_front_lat : -s * v.vx + c * v_front_lat;
  out.vrx = v.vx;
  out.vry = v.vy - p.l_r * v.omega;
  return out;
}

double slip_angle(double v_ix, double v_iy, double v0) {
  if (!(v0 > 0.0)) throw std::invalid_argument("slip_angle: v0 must be positive");
  return std::atan(v_iy / std::max(std::abs(v_ix), v0));
}

double lateral_tire_force(double alpha, double c_alpha, double f_max) {
  if (!(c_alpha > 0.0) || !(f_max > 0.0)) {
    throw std::invalid_argument("lateral_tire_force: c_alpha and f_max must be positive");
  }
  const double breakpoint = f_max / c_alpha;
  if (std::abs(alpha) < breakpoint) return -c_alpha * alpha;
  return alpha > 0.0 ? -f_max : f_max;
}

double drag_force(double v_fx, const TireParams& p) {
  return p.r1 * v_fx + p.r2 * v_fx * v_fx;
}

PlanarForces force_balance(double delta, double f_alpha_f, double f_alpha_r, double f_motor,
                           double f_drag, const VehicleParams& p) {
  const double c = std::cos(delta), s = std::sin(delta);
  const double f_long = f_motor - f_drag;  // along the front wheel heading
  PlanarForces out;
  out.fx = p.legacy_tire_frame ? c * f_long + s * f_alpha_f : c * f_long - s * f_alpha_f;
  const double fy_front = s * f_long + c * f_alpha_f;
  out.fy = fy_front + f_alpha_r;
  out.mz = p.l_f * fy_front - p.l_r * f_alpha_r;
  return out;
}

NeState ne_derivative(const NeState& x, const DriverInput& u, const VehicleParams& p) {
  const TireVelocities tv = tire_velocities(x.v, x.delta, p);
  const double alpha_f = slip_angle(tv.vfx, tv.vfy, p.tire.v0);
  const double alpha_r = slip_angle(tv.vrx, tv.vry, p.tire.v0);
  const double f_af = lateral_tire_force(alpha_f, p.tire.c_alpha_f, p.tire.f_max_f);
  const double f_ar = lateral_tire_force(alpha_r, p.tire.c_alpha_r, p.tire.f_max_r);
  const double f_m = motor_force(u.um, tv.vfx, p.motor);
  const double f_d = drag_force(tv.vfx, p.tire);
  const PlanarForces f = force_balance(x.delta, f_af, f_ar, f_m, f_d, p);
  NeState d;
  d.v.vx = f.fx / p.mass + x.v.omega * x.v.vy;
  d.v.vy = f.fy / p.mass - x.v.omega * x.v.vx;
  d.v.omega = f.mz / p.inertia_z;
  d.delta = steering_rate(x.delta, u.us, p.steering);
  return d;
}

namespace {

NeState axpy(const NeState& x, double h, const NeState& d) {
  return {{x.v.vx + h * d.v.vx, x.v.vy + h * d.v.vy, x.v.omega + h * d.v.omega},
          x.delta + h * d.delta};
}

void check_stage(const NeState& d) {
  const bool bad = !std::isfinite(d.v.vx) || !std::isfinite(d.v.vy) ||
                   !std::isfinite(d.v.omega) || !std::isfinite(d.delta) ||
                   std::abs(d.v.vx) > kDerivativeGuard || std::abs(d.v.vy) > kDerivativeGuard ||
                   std::abs(d.v.omega) > kDerivativeGuard || std::abs(d.delta) > kDerivativeGuard;
  if (bad) throw NumericError("ne_step: stage derivative exceeds guard");
}

NeState rk4_substep(const NeState& x, const DriverInput& u, const VehicleParams& p, double h) {
  const NeState k1 = ne_derivative(x, u, p);
  check_stage(k1);
  const NeState k2 = ne_derivative(axpy(x, 0.5 * h, k1), u, p);
  check_stage(k2);
  const NeState k3 = ne_derivative(axpy(x, 0.5 * h, k2), u, p);
  check_stage(k3);
  const NeState k4 = ne_derivative(axpy(x, h, k3), u, p);
  check_stage(k4);
  NeState out = x;
  out.v.vx += h / 6.0 * (k1.v.vx + 2.0 * k2.v.vx + 2.0 * k3.v.vx + k4.v.vx);
  out.v.vy += h / 6.0 * (k1.v.vy + 2.0 * k2.v.vy + 2.0 * k3.v.vy + k4.v.vy);
  out.v.omega += h / 6.0 * (k1.v.omega + 2.0 * k2.v.omega + 2.0 * k3.v.omega + k4.v.omega);
  out.delta += h / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta);
  // The exact servo solution never overshoots; the polynomial stage combination
  // can by a rounding-level amount, so pin the angle back into range.
  if (out.delta > p.steering.delta_max) out.delta = p.steering.delta_max;
  if (out.delta < -p.steering.delta_max) out.delta = -p.steering.delta_max;
  return out;
}

}  // namespace

NeState ne_step(const NeState& x, const DriverInput& u, const VehicleParams& p) {
  const double h = 0.5 * kSamplePeriod;
  return rk4_substep(rk4_substep(x, u, p, h), u, p, h);
}

double kinetic_energy(const BodyVelocity& v, const VehicleParams& p) {
  return 0.5 * p.mass * (v.vx * v.vx + v.vy * v.vy) + 0.5 * p.inertia_z * v.omega * v.omega;
}

}  // namespace stv
