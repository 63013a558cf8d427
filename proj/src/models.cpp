#include "stv/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stv/errors.hpp"

namespace stv {

namespace {

void check_window(const Trajectory& ref, std::size_t start, std::size_t count,
                  std::size_t min_context) {
  if (count == 0) throw std::invalid_argument("predict: count must be positive");
  if (start < min_context) throw std::invalid_argument("predict: not enough context");
  if (start + count > ref.size()) throw std::invalid_argument("predict: window past data end");
}

Eigen::Matrix3Xd nan_columns(std::size_t count) {
  return Eigen::Matrix3Xd::Constant(3, static_cast<Eigen::Index>(count),
                                    std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

PredictionResult NePredictor::predict(const Trajectory& ref, std::size_t start,
                                      std::size_t count) const {
  check_window(ref, start, count, min_context());
  if (!ref.has_kin()) throw std::invalid_argument("ne predict: needs steering-angle labels");
  PredictionResult out;
  out.vel = nan_columns(count);
  NeState x{ref.vel[start - 1], ref.kin[start - 1].delta};
  for (std::size_t j = 0; j < count; ++j) {
    try {
      x = ne_step(x, ref.input[start - 1 + j], p_);
    } catch (const NumericError&) {
      out.diverged_at = static_cast<long>(start + j);
      return out;
    }
    out.vel.col(static_cast<Eigen::Index>(j)) << x.v.vx, x.v.vy, x.v.omega;
  }
  return out;
}

PredictionResult KinPredictor::predict(const Trajectory& ref, std::size_t start,
                                       std::size_t count) const {
  check_window(ref, start, count, min_context());
  if (!ref.has_kin()) throw std::invalid_argument("kin predict: needs kinematic labels");
  PredictionResult out;
  out.vel = nan_columns(count);
  const std::vector<double> t(ref.t.begin() + static_cast<long>(start - 1),
                              ref.t.begin() + static_cast<long>(start + count));
  const std::vector<DriverInput> inputs(ref.input.begin() + static_cast<long>(start - 1),
                                        ref.input.begin() + static_cast<long>(start + count));
  try {
    const Trajectory rolled =
        rollout(*model_, ref.kin[start - 1], ref.pose[start - 1], t, inputs, p_);
    for (std::size_t j = 0; j < count; ++j) {
      const BodyVelocity& v = rolled.vel[j + 1];
      out.vel.col(static_cast<Eigen::Index>(j)) << v.vx, v.vy, v.omega;
    }
  } catch (const NumericError& e) {
    const long at = static_cast<long>(start) - 1 + std::max<long>(e.step(), 1);
    out.diverged_at = at;
  }
  return out;
}

NarxPredictor::NarxPredictor(MlpNetwork net) : net_(std::move(net)) {
  if (net_.input_dim() != 15 || net_.output_dim() != 3) {
    throw std::invalid_argument("NarxPredictor: network must map 15 inputs to 3 outputs");
  }
}

PredictionResult NarxPredictor::predict(const Trajectory& ref, std::size_t start,
                                        std::size_t count) const {
  check_window(ref, start, count, min_context());
  PredictionResult out;
  out.vel = nan_columns(count);
  // hist[i] is the velocity at reference index i: measured before `start`,
  // model output from there on.
  std::vector<Eigen::Vector3d> hist(start + count);
  for (std::size_t i = 0; i < start; ++i) {
    hist[i] << ref.vel[i].vx, ref.vel[i].vy, ref.vel[i].omega;
  }
  Eigen::VectorXd in(15);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t k = start + j - 1;
    for (std::size_t lag = 0; lag < 3; ++lag) {
      const std::size_t idx = k >= lag ? k - lag : 0;
      in.segment(static_cast<Eigen::Index>(3 * lag), 3) = hist[idx];
      const DriverInput& u = ref.input[idx];
      in[static_cast<Eigen::Index>(9 + 2 * lag)] = u.us;
      in[static_cast<Eigen::Index>(9 + 2 * lag + 1)] = u.um;
    }
    const Eigen::Vector3d v = net_.predict(in);
    if (!v.allFinite()) {
      out.diverged_at = static_cast<long>(start + j);
      return out;
    }
    hist[start + j] = v;
    out.vel.col(static_cast<Eigen::Index>(j)) = v;
  }
  return out;
}

MlpTransitionModel::MlpTransitionModel(MlpNetwork net) : net_(std::move(net)) {
  if (net_.input_dim() != 6 || net_.output_dim() != 3) {
    throw std::invalid_argument("MlpTransitionModel: network must map 6 inputs to 3 outputs");
  }
}

std::array<double, 3> MlpTransitionModel::predict(const KinematicState& x,
                                                  const DriverInput& u,
                                                  double /*ddelta*/) const {
  Eigen::VectorXd in(6);
  in << x.vf, x.alpha_f, x.alpha_r, x.delta, u.us, u.um;
  const Eigen::Vector3d y = net_.predict(in);
  return {y[0], y[1], y[2]};
}

ResidualTransitionModel::ResidualTransitionModel(SparseModel base, MlpNetwork correction)
    : base_(std::move(base)), correction_(std::move(correction)) {
  if (correction_.input_dim() != 6 || correction_.output_dim() != 3) {
    throw std::invalid_argument(
        "ResidualTransitionModel: network must map 6 inputs to 3 outputs");
  }
}

std::array<double, 3> ResidualTransitionModel::predict(const KinematicState& x,
                                                       const DriverInput& u,
                                                       double ddelta) const {
  const TermArgs a{x.vf, x.alpha_f, x.delta, ddelta, u.um, base_.c_ref};
  std::array<double, 3> pred = base_.eval(a);
  Eigen::VectorXd in(6);
  in << x.vf, x.alpha_f, x.alpha_r, x.delta, u.us, u.um;
  const Eigen::Vector3d corr = correction_.predict(in);
  pred[0] += corr[0];
  pred[1] += corr[1];
  pred[2] += corr[2];
  return pred;
}

}  // namespace stv
