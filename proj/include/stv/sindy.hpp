#pragma once

#include <Eigen/Core>
#include <vector>

#include "stv/kinematic.hpp"
#include "stv/trajectory.hpp"

namespace stv {

// Sequentially thresholded least squares for one target. `library` holds raw
// term values (one column per term, more rows than columns); `scales` are the
// per-term normalization divisors (typically the term standard deviations).
// Thresholding acts on the scaled coefficients; the returned coefficients apply
// to the raw term values. Terms with a non-positive scale are excluded.
// If pruning leaves a rank-deficient active set, the support freezes at the
// previous iterate and `support_frozen` is set.
struct StlsqResult {
  Eigen::VectorXd coeffs;
  bool support_frozen = false;
  int iterations = 0;
};
StlsqResult stlsq(const Eigen::VectorXd& target, const Eigen::MatrixXd& library,
                  double threshold, const Eigen::VectorXd& scales);

// Fits the three-channel sparse kinematic transition model on labeled 10 Hz
// trajectories: features at sample k (with the servo rate reconstructed from
// delta_k and us_k), targets at k+1. Pairs touching flagged samples are
// dropped. Term scales are the per-term standard deviations over the
// assembled data.
SparseModel fit_ksindy(const std::vector<Trajectory>& data, double threshold,
                       const VehicleParams& p);

// Feature/target assembly shared by the fitting path and the tests.
struct KsindyData {
  Eigen::MatrixXd vf_lib;    // N x 16
  Eigen::MatrixXd slip_lib;  // N x 13
  Eigen::MatrixXd targets;   // N x 3 (vf', af', ar')
};
KsindyData assemble_ksindy_data(const std::vector<Trajectory>& data, const VehicleParams& p);

}  // namespace stv
