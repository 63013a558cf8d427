#include "stv/actuators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stv {

namespace {

void check_steer_args(double delta, double us, double dt, const SteeringParams& p,
                      bool with_dt) {
  if (!std::isfinite(delta) || !std::isfinite(us)) {
    throw std::invalid_argument("steering: non-finite angle");
  }
  if (std::abs(delta) > p.delta_max + 1e-9 || std::abs(us) > p.delta_max + 1e-9) {
    throw std::domain_error("steering: angle outside +-delta_max");
  }
  if (with_dt && (!(dt > 0.0) || !std::isfinite(dt))) {
    throw std::invalid_argument("steering: dt must be positive and finite");
  }
}

}  // namespace

double steering_rate(double delta, double us, const SteeringParams& p) {
  check_steer_args(delta, us, 0.0, p, false);
  const double raw = (us - delta) / p.tau;
  return std::clamp(raw, -p.rate_max, p.rate_max);
}

double steer_step(double delta, double us, double dt, const SteeringParams& p) {
  check_steer_args(delta, us, dt, p, true);
  const double e = us - delta;
  if (e == 0.0) return delta;
  const double s = e > 0.0 ? 1.0 : -1.0;
  const double boundary = p.rate_max * p.tau;  // error magnitude where slew saturates
  double mag = std::abs(e);
  double remaining = dt;
  if (mag > boundary) {
    const double t_sat = (mag - boundary) / p.rate_max;
    if (remaining <= t_sat) {
      return delta + s * p.rate_max * remaining;
    }
    remaining -= t_sat;
    mag = boundary;
  }
  const double out = us - s * mag * std::exp(-remaining / p.tau);
  return std::clamp(out, -p.delta_max, p.delta_max);
}

double motor_force(double um, double v_fx, const MotorParams& p) {
  if (!std::isfinite(um) || !std::isfinite(v_fx)) {
    throw std::invalid_argument("motor_force: non-finite input");
  }
  if (std::abs(um) > 1.0 + 1e-12) {
    throw std::domain_error("motor_force: |um| > 1");
  }
  if (um > 0.0) {
    return std::clamp(p.k_t * (um * p.c_ref - v_fx), -p.f_max, p.f_max);
  }
  return um * p.k_b * v_fx;
}

}  // namespace stv
