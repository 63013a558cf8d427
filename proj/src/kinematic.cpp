#include "stv/kinematic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stv/actuators.hpp"
#include "stv/errors.hpp"
#include "stv/frames.hpp"

namespace stv {

BodyVelocity g_kin(const KinematicState& x, const VehicleParams& p) {
  if (!(x.vf >= 0.0) || !std::isfinite(x.vf)) {
    throw std::domain_error("g_kin: vf must be finite and non-negative");
  }
  const double beta_f = x.delta + x.alpha_f;
  const double beta_r = x.alpha_r;
  if (!std::isfinite(beta_f) || std::abs(beta_r) >= M_PI_2 - 1e-9) {
    throw std::domain_error("g_kin: rear tire heading too close to +-pi/2");
  }
  const double sb = std::sin(beta_f), cb = std::cos(beta_f);
  const double tr = std::tan(beta_r);
  const double wheelbase = p.l_f + p.l_r;
  BodyVelocity v;
  v.vx = cb * x.vf;
  v.vy = (p.l_f * sb + p.l_r * cb * tr) / wheelbase * x.vf;
  v.omega = (sb - cb * tr) / wheelbase * x.vf;
  return v;
}

std::array<double, 3> SparseModel::eval(const TermArgs& a) const {
  std::array<double, 3> out = {0.0, 0.0, 0.0};
  for (const auto& [term, coef] : vf) out[0] += coef * eval_vf_term(term, a);
  for (const auto& [term, coef] : af) out[1] += coef * eval_slip_term(term, a);
  for (const auto& [term, coef] : ar) out[2] += coef * eval_slip_term(term, a);
  return out;
}

std::array<double, 3> SparseTransitionModel::predict(const KinematicState& x,
                                                     const DriverInput& u,
                                                     double ddelta) const {
  const TermArgs a{x.vf, x.alpha_f, x.delta, ddelta, u.um, model_.c_ref};
  return model_.eval(a);
}

const SparseModel& reference_model() {
  static const SparseModel model = [] {
    SparseModel m;
    m.c_ref = 2.033;
    m.vf = {
        {VfTerm::kVf, 0.968},
        {VfTerm::kVf2, 0.0379},
        {VfTerm::kVf3, -0.0155},
        {VfTerm::kAf2, -0.475},
        {VfTerm::kThrottle, 0.053},
        {VfTerm::kThrottleVf, 0.025811},
        {VfTerm::kBrakeVf, 0.181},
        {VfTerm::kBrakeVf2, -0.083622},
    };
    m.af = {
        {SlipTerm::kAf, 0.777},
        {SlipTerm::kVfDeltaAbsDelta, 0.00718},
        {SlipTerm::kVf2Delta, -0.0117},
        {SlipTerm::kVfDdelta, 0.0259},
        {SlipTerm::kVfDdeltaAbsDdelta, -0.0169},
        {SlipTerm::kVf2Ddelta, -0.0169},
        {SlipTerm::kVfDdeltaDelta2, -0.00836},
    };
    m.ar = {
        {SlipTerm::kAf, -0.0485},
        {SlipTerm::kVfDelta, 0.0147},
        {SlipTerm::kVfDeltaAbsDelta, -0.0127},
        {SlipTerm::kVfDdeltaAbsDelta, -0.00661},
        {SlipTerm::kVfDdeltaDelta2, 0.00580},
    };
    return m;
  }();
  return model;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_sparse_model(const SparseModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# sparse kinematic transition model\n";
  out << "param c_ref " << fmt(m.c_ref) << '\n';
  if (m.threshold > 0.0) out << "param threshold " << fmt(m.threshold) << '\n';
  if (m.support_frozen) out << "param support_frozen 1\n";
  for (const auto& [term, coef] : m.vf) {
    out << "vf " << vf_term_name(term) << ' ' << fmt(coef) << '\n';
  }
  for (const auto& [term, coef] : m.af) {
    out << "af " << slip_term_name(term) << ' ' << fmt(coef) << '\n';
  }
  for (const auto& [term, coef] : m.ar) {
    out << "ar " << slip_term_name(term) << ' ' << fmt(coef) << '\n';
  }
}

SparseModel load_sparse_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  SparseModel m;
  m.vf.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind, name, value;
    if (!(ss >> kind >> name >> value)) {
      throw std::invalid_argument("sparse model: malformed line " + std::to_string(lineno));
    }
    if (kind == "param") {
      if (name == "c_ref") m.c_ref = std::stod(value);
      else if (name == "threshold") m.threshold = std::stod(value);
      else if (name == "support_frozen") m.support_frozen = value != "0";
      else throw std::invalid_argument("sparse model: unknown param " + name);
    } else if (kind == "vf") {
      m.vf.emplace_back(vf_term_from_name(name), std::stod(value));
    } else if (kind == "af") {
      m.af.emplace_back(slip_term_from_name(name), std::stod(value));
    } else if (kind == "ar") {
      m.ar.emplace_back(slip_term_from_name(name), std::stod(value));
    } else {
      throw std::invalid_argument("sparse model: unknown target " + kind);
    }
  }
  return m;
}

KinematicState reference_step(const KinematicState& x, const DriverInput& u,
                              const VehicleParams& p) {
  const double ddelta = steering_rate(x.delta, u.us, p.steering);
  const TermArgs a{x.vf, x.alpha_f, x.delta, ddelta, u.um, reference_model().c_ref};
  const std::array<double, 3> pred = reference_model().eval(a);
  KinematicState next;
  next.vf = std::max(pred[0], 0.0);
  next.alpha_f = pred[1];
  next.alpha_r = pred[2];
  next.delta = steer_step(x.delta, u.us, kSamplePeriod, p.steering);
  return next;
}

Trajectory rollout(const TransitionModel& m, const KinematicState& x0, const Pose& pose0,
                   const std::vector<double>& t, const std::vector<DriverInput>& inputs,
                   const VehicleParams& p) {
  if (t.size() != inputs.size() || t.empty()) {
    throw std::invalid_argument("rollout: time and input sizes must match and be non-empty");
  }
  Trajectory out;
  out.t = t;
  out.input = inputs;
  out.pose.reserve(t.size());
  out.vel.reserve(t.size());
  out.kin.reserve(t.size());
  KinematicState x = x0;
  Pose pose = pose0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    BodyVelocity v;
    try {
      v = g_kin(x, p);
    } catch (const std::domain_error& e) {
      throw NumericError(std::string("rollout: ") + e.what(), static_cast<long>(k));
    }
    out.pose.push_back(pose);
    out.vel.push_back(v);
    out.kin.push_back(x);
    if (k + 1 == t.size()) break;
    const double ddelta = steering_rate(x.delta, inputs[k].us, p.steering);
    const std::array<double, 3> pred = m.predict(x, inputs[k], ddelta);
    if (!std::isfinite(pred[0]) || !std::isfinite(pred[1]) || !std::isfinite(pred[2])) {
      throw NumericError("rollout: non-finite prediction", static_cast<long>(k));
    }
    x.vf = std::max(pred[0], 0.0);
    x.alpha_f = pred[1];
    x.alpha_r = pred[2];
    x.delta = steer_step(x.delta, inputs[k].us, kSamplePeriod, p.steering);
    pose = integrate_pose(pose, v, kSamplePeriod);
  }
  return out;
}

}  // namespace stv
