#include "stv/ekf.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "stv/actuators.hpp"
#include "stv/errors.hpp"
#include "stv/kinematic.hpp"

namespace stv {

namespace {

using Vec = Eigen::Matrix<double, kEkfDim, 1>;
using Mat = Eigen::Matrix<double, kEkfDim, kEkfDim>;

constexpr double kJacobianStep = 1e-6;

// Domain bound for the rear slip state. The output map is singular at
// beta_r = +-pi/2 (a spinning pose at crawl speed pulls the estimate into the
// singularity); the process model itself only decays beta_r, so enforcing the
// bound after each predict and update keeps the filter recoverable without
// touching ordinary operation, where |beta_r| stays below a few tenths.
constexpr double kBetaRLimit = 1.45;

// The estimate must stay in the domain where the process model is informative.
// For vf < 0 the model freezes the pose (a parked car), so a gain step that
// lands there severs the pose measurements' sensitivity to speed: the estimate
// then drifts on process noise alone until the inflated gain catapults it.
// Pinning vf at zero keeps the one-sided speed sensitivity alive, and the
// beta_r bound keeps the output map away from its singularity.
void clamp_domain(Vec& x) {
  x[3] = std::max(x[3], 0.0);
  x[5] = std::clamp(x[5], -kBetaRLimit, kBetaRLimit);
}

Mat process_jacobian(const Vec& x, const DriverInput& u, const VehicleParams& p,
                     const EkfConfig& cfg) {
  Mat F;
  for (int j = 0; j < kEkfDim; ++j) {
    Vec xp = x, xm = x;
    xp[j] += kJacobianStep;
    xm[j] -= kJacobianStep;
    F.col(j) = (ekf_process(xp, u, p, cfg) - ekf_process(xm, u, p, cfg)) / (2.0 * kJacobianStep);
  }
  return F;
}

Mat noise_input(const EkfConfig& cfg) {
  Mat GQGt = Mat::Zero();
  GQGt(3, 3) = cfg.q[0];
  GQGt(4, 4) = cfg.q[1];
  GQGt(5, 5) = cfg.q[2];
  return GQGt;
}

void check_psd(const Mat& P) {
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().maxCoeff());
  if (min_ev < -1e-8 * scale) {
    throw NumericError("ekf: covariance lost positive semi-definiteness");
  }
}

}  // namespace

double ekf_gamma(double vf) { return 0.5 * (std::tanh(10.0 * vf - 1.0) + 1.0); }

Vec ekf_process(const Vec& x, const DriverInput& u, const VehicleParams& p,
                const EkfConfig& cfg) {
  const double theta = x[2], vf = x[3], beta_f = x[4], beta_r = x[5], delta = x[6];
  KinematicState kin;
  kin.vf = std::max(vf, 0.0);
  kin.alpha_f = beta_f - delta;
  kin.alpha_r = beta_r;
  kin.delta = delta;
  const BodyVelocity v = g_kin(kin, p);
  const double c = std::cos(theta), s = std::sin(theta);
  const double decay = cfg.eta * (1.0 - ekf_gamma(vf));
  Vec dx;
  dx[0] = c * v.vx - s * v.vy;
  dx[1] = s * v.vx + c * v.vy;
  dx[2] = v.omega;
  dx[3] = 0.0;
  dx[4] = decay * (delta - beta_f);
  dx[5] = decay * (-beta_r);
  dx[6] = std::clamp((u.us - delta) / p.steering.tau, -p.steering.rate_max, p.steering.rate_max);
  return dx;
}

EkfState ekf_predict(const EkfState& s, const DriverInput& u, double dt,
                     const VehicleParams& p, const EkfConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("ekf_predict: dt must be positive");
  if (cfg.predict_substeps < 1) {
    throw std::invalid_argument("ekf_predict: predict_substeps must be >= 1");
  }
  const Mat GQGt = noise_input(cfg);
  auto deriv = [&](const Vec& x, const Mat& P) {
    const Mat F = process_jacobian(x, u, p, cfg);
    return std::pair<Vec, Mat>(ekf_process(x, u, p, cfg),
                               (F * P + P * F.transpose() + GQGt).eval());
  };
  const double h = dt / cfg.predict_substeps;
  EkfState out = s;
  for (int sub = 0; sub < cfg.predict_substeps; ++sub) {
    const auto [k1x, k1P] = deriv(out.x, out.P);
    const auto [k2x, k2P] = deriv(out.x + 0.5 * h * k1x, out.P + 0.5 * h * k1P);
    const auto [k3x, k3P] = deriv(out.x + 0.5 * h * k2x, out.P + 0.5 * h * k2P);
    const auto [k4x, k4P] = deriv(out.x + h * k3x, out.P + h * k3P);
    out.x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.P += h / 6.0 * (k1P + 2.0 * k2P + 2.0 * k3P + k4P);
    out.P = 0.5 * (out.P + out.P.transpose()).eval();
  }
  if (!out.x.allFinite() || !out.P.allFinite()) {
    throw NumericError("ekf_predict: non-finite state or covariance");
  }
  check_psd(out.P);
  clamp_domain(out.x);
  // The servo state stays in its physical range.
  out.x[6] = std::clamp(out.x[6], -p.steering.delta_max, p.steering.delta_max);
  return out;
}

EkfState ekf_update(const EkfState& s, const Pose& z, const EkfConfig& cfg, double* nis) {
  Eigen::Matrix<double, 3, kEkfDim> H = Eigen::Matrix<double, 3, kEkfDim>::Zero();
  H(0, 0) = H(1, 1) = H(2, 2) = 1.0;
  Eigen::Vector3d innov(z.px - s.x[0], z.py - s.x[1], wrap_angle(z.theta - s.x[2]));
  const Eigen::Matrix3d R = cfg.r.asDiagonal();
  const Eigen::Matrix3d S = H * s.P * H.transpose() + R;
  const Eigen::Matrix3d Sinv = S.inverse();
  const Eigen::Matrix<double, kEkfDim, 3> K = s.P * H.transpose() * Sinv;
  EkfState out;
  out.x = s.x + K * innov;
  const Mat IKH = Mat::Identity() - K * H;
  out.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  if (!out.x.allFinite() || !out.P.allFinite()) {
    throw NumericError("ekf_update: non-finite state or covariance");
  }
  clamp_domain(out.x);
  if (nis) *nis = innov.dot(Sinv * innov);
  return out;
}

Trajectory smooth_dataset(const Trajectory& measured, const VehicleParams& p,
                          const EkfConfig& cfg, std::vector<double>* nis_out) {
  measured.validate();
  Trajectory out = measured;
  out.kin.assign(measured.size(), KinematicState{});

  auto init_at = [&](std::size_t k) {
    EkfState s;
    s.x[0] = measured.pose[k].px;
    s.x[1] = measured.pose[k].py;
    s.x[2] = measured.pose[k].theta;
    s.x[3] = 0.0;
    const double d =
        std::clamp(measured.input[k].us, -p.steering.delta_max, p.steering.delta_max);
    s.x[4] = d;
    s.x[5] = 0.0;
    s.x[6] = d;
    s.P = cfg.p0_std.array().square().matrix().asDiagonal();
    return s;
  };

  EkfState s = init_at(0);
  for (std::size_t k = 0; k < measured.size(); ++k) {
    if (k > 0) {
      if (measured.is_flagged(k)) {
        // A collision flag marks a physical reset: the recorded pose jumps
        // and the velocity is zeroed, so restart the filter at rest instead
        // of forcing the smooth process model across the discontinuity.
        s = init_at(k);
      } else {
        try {
          s = ekf_predict(s, measured.input[k - 1], kSamplePeriod, p, cfg);
          double nis = 0.0;
          s = ekf_update(s, measured.pose[k], cfg, &nis);
          if (nis_out) nis_out->push_back(nis);
        } catch (const NumericError& e) {
          throw NumericError(std::string("smooth_dataset: ") + e.what(), static_cast<long>(k));
        }
      }
    }
    KinematicState kin;
    kin.vf = std::max(s.x[3], 0.0);
    kin.alpha_f = s.x[4] - s.x[6];
    kin.alpha_r = s.x[5];
    kin.delta = s.x[6];
    out.kin[k] = kin;
    out.vel[k] = g_kin(kin, p);
  }
  return out;
}

}  // namespace stv
