#include "stv/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "stv/frames.hpp"
#include "stv/types.hpp"

namespace stv {

namespace {

double eval_deterministic(const SignalSpec& s, double t_local, double duration) {
  if (s.kind == "constant") return s.value;
  if (s.kind == "ramp") {
    const double frac = duration > 0.0 ? t_local / duration : 0.0;
    return s.from + (s.to - s.from) * frac;
  }
  if (s.kind == "sinusoid") {
    return s.offset + s.amp * std::sin(2.0 * std::numbers::pi * s.freq * t_local + s.phase);
  }
  if (s.kind == "bangbang") {
    if (!(s.period > 0.0)) throw std::invalid_argument("bangbang: period must be positive");
    const double phase = std::fmod(t_local, s.period);
    return s.offset + (phase < 0.5 * s.period ? s.amp : -s.amp);
  }
  throw std::invalid_argument("unknown signal kind: " + s.kind);
}

// Gaussian white noise through a one-pole low pass. The filter state starts at
// zero, so the first samples ramp in rather than jump.
std::vector<double> render_noise(const SignalSpec& s, std::size_t count,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> white(0.0, 1.0);
  if (!(s.cutoff > 0.0)) throw std::invalid_argument("noise: cutoff must be positive");
  const double rc = 1.0 / (2.0 * std::numbers::pi * s.cutoff);
  const double alpha = kSamplePeriod / (kSamplePeriod + rc);
  std::vector<double> out(count);
  double y = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    y += alpha * (s.amp * white(rng) - y);
    out[i] = s.offset + y;
  }
  return out;
}

}  // namespace

std::vector<DriverInput> render_profile(const ExcitationProfile& profile, std::uint64_t seed,
                                        double delta_max) {
  std::mt19937_64 rng(seed);
  std::vector<DriverInput> inputs;
  for (const ProfileSegment& seg : profile.segments) {
    const auto count = static_cast<std::size_t>(std::llround(seg.duration / kSamplePeriod));
    if (count == 0) throw std::invalid_argument("render_profile: segment shorter than a sample");
    std::vector<double> us_noise, um_noise;
    if (seg.us.kind == "noise") us_noise = render_noise(seg.us, count, rng);
    if (seg.um.kind == "noise") um_noise = render_noise(seg.um, count, rng);
    for (std::size_t i = 0; i < count; ++i) {
      const double t_local = static_cast<double>(i) * kSamplePeriod;
      DriverInput u;
      u.us = seg.us.kind == "noise" ? us_noise[i]
                                    : eval_deterministic(seg.us, t_local, seg.duration);
      u.um = seg.um.kind == "noise" ? um_noise[i]
                                    : eval_deterministic(seg.um, t_local, seg.duration);
      u.us = std::clamp(u.us, -delta_max, delta_max);
      u.um = std::clamp(u.um, -1.0, 1.0);
      inputs.push_back(u);
    }
  }
  if (inputs.empty()) throw std::invalid_argument("render_profile: empty profile");
  return inputs;
}

Trajectory simulate_vehicle(const std::vector<DriverInput>& inputs, const VehicleParams& p,
                            const GenConfig& cfg) {
  if (inputs.empty()) throw std::invalid_argument("simulate_vehicle: no inputs");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Trajectory traj;
  traj.t.reserve(inputs.size());
  NeState x;  // at rest, steering centered
  Pose pose;
  bool just_bounced = false;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    traj.t.push_back(static_cast<double>(k) * kSamplePeriod);
    Pose measured = pose;
    measured.px += cfg.pose_noise_px * gauss(rng);
    measured.py += cfg.pose_noise_py * gauss(rng);
    measured.theta = wrap_angle(measured.theta + cfg.pose_noise_theta * gauss(rng));
    traj.pose.push_back(measured);
    traj.vel.push_back(x.v);
    const TireVelocities tv = tire_velocities(x.v, x.delta, p);
    KinematicState kin;
    kin.vf = std::hypot(tv.vfx, tv.vfy);
    kin.alpha_f = slip_angle(tv.vfx, tv.vfy, p.tire.v0);
    kin.alpha_r = slip_angle(tv.vrx, tv.vry, p.tire.v0);
    kin.delta = x.delta;
    traj.kin.push_back(kin);
    traj.input.push_back(inputs[k]);
    if (just_bounced) {
      traj.flagged.push_back(k);
      just_bounced = false;
    }

    if (k + 1 == inputs.size()) break;
    pose = integrate_pose(pose, x.v, kSamplePeriod);
    x = ne_step(x, inputs[k], p);
    if (cfg.bounce) {
      // A wall contact is not modelled dynamically: the car stops dead and its
      // heading reflects, as if repositioned by hand. The reset point sits a
      // small inset inside the wall; without it, a large steering angle can
      // yaw the car back over the line on the very next step and trap it in a
      // bounce loop. The next sample is flagged so one-step regressions skip
      // the discontinuity.
      constexpr double kWallInset = 0.1;
      bool hit = false;
      if (std::abs(pose.px) > cfg.half_x) {
        const double lim = cfg.half_x - kWallInset;
        pose.px = std::clamp(pose.px, -lim, lim);
        pose.theta = wrap_angle(std::numbers::pi - pose.theta);
        hit = true;
      }
      if (std::abs(pose.py) > cfg.half_y) {
        const double lim = cfg.half_y - kWallInset;
        pose.py = std::clamp(pose.py, -lim, lim);
        pose.theta = wrap_angle(-pose.theta);
        hit = true;
      }
      if (hit) {
        x.v = BodyVelocity{};
        just_bounced = true;
      }
    }
  }
  traj.validate();
  return traj;
}

}  // namespace stv
