#pragma once

#include <Eigen/Core>

namespace stv {

// Normalized mean squared error over an n-channel, N-sample residual:
//   L = 1/(n*N) * sum_k || W * (pred_k - meas_k) ||^2
// with W = diag(weights). Columns are samples, rows are channels.
// Weights are the inverse per-channel standard deviations of the training targets;
// they must be positive and finite. Throws std::invalid_argument on dimension
// mismatch, empty input, or non-finite values.
double nmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& meas,
            const Eigen::VectorXd& weights);

// Per-channel inverse standard deviation of the given targets (population std).
// Channels with zero spread are rejected: a constant target cannot be normalized.
Eigen::VectorXd inverse_std_weights(const Eigen::MatrixXd& targets);

}  // namespace stv
