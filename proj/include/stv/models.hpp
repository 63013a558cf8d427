#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "stv/kinematic.hpp"
#include "stv/mlp.hpp"
#include "stv/newton_euler.hpp"
#include "stv/trajectory.hpp"

namespace stv {

struct PredictionResult {
  Eigen::Matrix3Xd vel;    // predicted body velocities, one column per sample
  long diverged_at = -1;   // reference index of the first failed sample, -1 if none
};

// Closed-loop one-model predictor: seeds itself from reference samples before
// `start`, then predicts samples [start, start + count) from the recorded
// driver commands alone. Columns past a divergence hold NaN.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t min_context() const = 0;
  virtual PredictionResult predict(const Trajectory& ref, std::size_t start,
                                   std::size_t count) const = 0;
};

// Full rigid-body model stepped from the labelled state at start - 1.
class NePredictor : public Predictor {
 public:
  explicit NePredictor(VehicleParams p) : p_(std::move(p)) {}
  std::string name() const override { return "ne"; }
  std::size_t min_context() const override { return 1; }
  PredictionResult predict(const Trajectory& ref, std::size_t start,
                           std::size_t count) const override;

 private:
  VehicleParams p_;
};

// Kinematic-state transition model rolled out from the label at start - 1 and
// mapped to body velocities.
class KinPredictor : public Predictor {
 public:
  KinPredictor(std::shared_ptr<const TransitionModel> model, VehicleParams p)
      : model_(std::move(model)), p_(std::move(p)) {}
  std::string name() const override { return model_->name(); }
  std::size_t min_context() const override { return 1; }
  PredictionResult predict(const Trajectory& ref, std::size_t start,
                           std::size_t count) const override;

 private:
  std::shared_ptr<const TransitionModel> model_;
  VehicleParams p_;
};

// Velocity-history network: (v_k, v_k-1, v_k-2, u_k, u_k-1, u_k-2) -> v_k+1.
// Missing history before the first sample is padded by replication.
class NarxPredictor : public Predictor {
 public:
  explicit NarxPredictor(MlpNetwork net);
  std::string name() const override { return "narx"; }
  std::size_t min_context() const override { return 1; }
  PredictionResult predict(const Trajectory& ref, std::size_t start,
                           std::size_t count) const override;

 private:
  MlpNetwork net_;
};

// Network transition over (vf, alpha_f, alpha_r, delta, us, um).
class MlpTransitionModel : public TransitionModel {
 public:
  explicit MlpTransitionModel(MlpNetwork net);
  std::array<double, 3> predict(const KinematicState& x, const DriverInput& u,
                                double ddelta) const override;
  std::string name() const override { return "kmlp"; }

 private:
  MlpNetwork net_;
};

// Sparse model plus a learned correction network over the same six inputs.
class ResidualTransitionModel : public TransitionModel {
 public:
  ResidualTransitionModel(SparseModel base, MlpNetwork correction);
  std::array<double, 3> predict(const KinematicState& x, const DriverInput& u,
                                double ddelta) const override;
  std::string name() const override { return "ksindy-mlp"; }
  const SparseModel& base() const { return base_; }

 private:
  SparseModel base_;
  MlpNetwork correction_;
};

}  // namespace stv
