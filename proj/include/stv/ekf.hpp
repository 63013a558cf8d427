#pragma once

#include <Eigen/Core>
#include <vector>

#include "stv/newton_euler.hpp"
#include "stv/trajectory.hpp"
#include "stv/types.hpp"

namespace stv {

// State-space filter that recovers front-wheel speed, tire heading angles and
// the steering angle from pose measurements alone. State ordering:
//   [px, py, theta, vf, beta_f, beta_r, delta]
// The process model drives the pose through the kinematic velocity map; vf is
// a random walk; the heading angles relax toward (delta, 0) with rate
// eta * (1 - gamma(vf)), where gamma blends the relaxation out at speed; delta
// follows the saturated servo law.
inline constexpr int kEkfDim = 7;

struct EkfConfig {
  // Continuous process-noise intensities [unit^2/s] on (vf, beta_f, beta_r).
  Eigen::Vector3d q = {0.05, 0.02, 0.02};
  // Pose measurement variances (px, py, theta).
  Eigen::Vector3d r = {1e-6, 1e-6, 1e-6};
  // Initial standard deviations per state channel.
  Eigen::Matrix<double, kEkfDim, 1> p0_std =
      (Eigen::Matrix<double, kEkfDim, 1>() << 1e-2, 1e-2, 1e-2, 1.0, 0.5, 0.5, 0.1).finished();
  double eta = 20.0;
  // RK4 substeps per predict. The covariance equation doubles the slip decay
  // pole eta (1 - gamma(0)), so one 0.1 s step sits outside the RK4 stability
  // region near standstill; eight substeps keep h lambda under 0.5.
  int predict_substeps = 8;
};

struct EkfState {
  Eigen::Matrix<double, kEkfDim, 1> x = Eigen::Matrix<double, kEkfDim, 1>::Zero();
  Eigen::Matrix<double, kEkfDim, kEkfDim> P = Eigen::Matrix<double, kEkfDim, kEkfDim>::Zero();
};

// Speed-dependent blending of the slip relaxation: 0 near standstill, 1 at speed.
double ekf_gamma(double vf);

// Process derivative at fixed input. Shared by the filter, its Jacobian, and
// the self-consistency simulations in the tests.
Eigen::Matrix<double, kEkfDim, 1> ekf_process(const Eigen::Matrix<double, kEkfDim, 1>& x,
                                              const DriverInput& u, const VehicleParams& p,
                                              const EkfConfig& cfg);

// RK4 propagation of mean and covariance over dt:
//   P_dot = F P + P F^T + G Q G^T
// with F from central differences (step 1e-6). The covariance is symmetrized;
// losing positive semi-definiteness raises NumericError.
EkfState ekf_predict(const EkfState& s, const DriverInput& u, double dt,
                     const VehicleParams& p, const EkfConfig& cfg);

// Pose measurement update with the yaw innovation wrapped to (-pi, pi].
// Joseph-form covariance update, symmetrized. Returns the normalized innovation
// squared (NIS) through `nis` when non-null.
EkfState ekf_update(const EkfState& s, const Pose& z, const EkfConfig& cfg,
                    double* nis = nullptr);

// Runs the filter over a pose/input recording and returns the same trajectory
// with kinematic labels (vf, alpha_f = beta_f - delta, alpha_r = beta_r, delta)
// and body velocities replaced by the filtered estimates. Poses stay as
// measured. Per-sample NIS values are appended to `nis_out` when provided.
Trajectory smooth_dataset(const Trajectory& measured, const VehicleParams& p,
                          const EkfConfig& cfg, std::vector<double>* nis_out = nullptr);

}  // namespace stv
