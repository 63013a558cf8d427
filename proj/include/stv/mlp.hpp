#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stv/kinematic.hpp"
#include "stv/trajectory.hpp"

namespace stv {

// Fully connected ReLU network with z-scored inputs and targets. Training uses
// Adam, inverted dropout on hidden activations, and a held-out tail of the
// sample stream for early stopping.
struct MlpConfig {
  std::vector<int> hidden = {256, 128};
  double dropout = 0.1;
  double learning_rate = 5e-5;
  double lr_decay = 0.6;
  int lr_step = 40;
  int epochs = 400;
  int batch_size = 64;
  int patience = 60;
  double weight_decay = 1e-5;
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct MlpTrainResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val = 0.0;
};

class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(int input_dim, const std::vector<int>& hidden, int output_dim,
             std::uint64_t seed);

  int input_dim() const { return w_.empty() ? 0 : static_cast<int>(w_.front().cols()); }
  int output_dim() const { return w_.empty() ? 0 : static_cast<int>(w_.back().rows()); }
  int layer_count() const { return static_cast<int>(w_.size()); }

  // Sets the z-score statistics applied before/after the network. Stds must be
  // positive; use 1 with zero mean for pass-through channels.
  void set_normalization(const Eigen::VectorXd& in_mean, const Eigen::VectorXd& in_std,
                         const Eigen::VectorXd& out_mean, const Eigen::VectorXd& out_std);

  // Physical units in, physical units out. Rows are samples.
  Eigen::VectorXd predict(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const;

  // Mean squared error in normalized target space plus 0.5*weight_decay*|W|^2,
  // evaluated without dropout. `gradient` is the exact derivative of `loss`
  // with respect to parameters() and shares its flat layout.
  double loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
              double weight_decay = 0.0) const;
  Eigen::VectorXd gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           double weight_decay = 0.0) const;

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  friend MlpTrainResult mlp_train(MlpNetwork& net, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets, const MlpConfig& cfg);
  friend void save_mlp(const MlpNetwork& net, const std::string& path);
  friend MlpNetwork load_mlp(const std::string& path);

 private:
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
  Eigen::VectorXd in_mean_, in_std_, out_mean_, out_std_;
};

// Fits `net` in place on rows-as-samples data in physical units. Normalization
// statistics are taken from the training portion; the trailing
// `cfg.val_fraction` of rows is kept time-contiguous for early stopping and the
// parameters from the best validation epoch are restored. Throws NumericError
// if the loss becomes non-finite.
MlpTrainResult mlp_train(MlpNetwork& net, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets, const MlpConfig& cfg);

void save_mlp(const MlpNetwork& net, const std::string& path);
MlpNetwork load_mlp(const std::string& path);

struct SupervisedData {
  Eigen::MatrixXd inputs;   // one row per sample
  Eigen::MatrixXd targets;  // one row per sample
};

// One-step regression sets drawn from consecutive unflagged samples.
// Body-velocity history regression: inputs are (v_k, v_{k-1}, v_{k-2},
// u_k, u_{k-1}, u_{k-2}) with v = (vx, vy, omega) and u = (us, um); the target
// is v_{k+1}.
SupervisedData assemble_narx(const std::vector<Trajectory>& data);

// Tire-frame state regression: inputs are (vf, alpha_f, alpha_r, delta, us,
// um) at sample k; the target is (vf, alpha_f, alpha_r) at k+1.
SupervisedData assemble_kmlp(const std::vector<Trajectory>& data);

// Same inputs as assemble_kmlp; the target is the labelled next state minus
// the sparse model's unclamped one-step prediction.
SupervisedData assemble_residual(const std::vector<Trajectory>& data,
                                 const SparseModel& model, const VehicleParams& params);

}  // namespace stv
