#include "stv/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace stv {

double nmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& meas,
            const Eigen::VectorXd& weights) {
  if (pred.rows() != meas.rows() || pred.cols() != meas.cols()) {
    throw std::invalid_argument("nmse: prediction/measurement shape mismatch");
  }
  if (pred.rows() == 0 || pred.cols() == 0) {
    throw std::invalid_argument("nmse: empty input");
  }
  if (weights.size() != pred.rows()) {
    throw std::invalid_argument("nmse: weight count must equal channel count");
  }
  if (!weights.allFinite() || (weights.array() <= 0.0).any()) {
    throw std::invalid_argument("nmse: weights must be positive and finite");
  }
  if (!pred.allFinite() || !meas.allFinite()) {
    throw std::invalid_argument("nmse: non-finite values in input");
  }
  const Eigen::MatrixXd r = weights.asDiagonal() * (pred - meas);
  const double n = static_cast<double>(pred.rows());
  const double N = static_cast<double>(pred.cols());
  return r.squaredNorm() / (n * N);
}

Eigen::VectorXd inverse_std_weights(const Eigen::MatrixXd& targets) {
  if (targets.cols() < 2) {
    throw std::invalid_argument("inverse_std_weights: need at least two samples");
  }
  if (!targets.allFinite()) {
    throw std::invalid_argument("inverse_std_weights: non-finite targets");
  }
  Eigen::VectorXd w(targets.rows());
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    const double mean = targets.row(i).mean();
    const double var = (targets.row(i).array() - mean).square().mean();
    if (!(var > 0.0)) {
      throw std::invalid_argument("inverse_std_weights: channel has zero spread");
    }
    w[i] = 1.0 / std::sqrt(var);
  }
  return w;
}

}  // namespace stv
