#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "stv/library.hpp"
#include "stv/newton_euler.hpp"
#include "stv/trajectory.hpp"
#include "stv/types.hpp"

namespace stv {

// Maps a kinematic state to body-frame velocities through the tire heading
// angles beta_f = delta + alpha_f and beta_r = alpha_r:
//   vx    = cos(beta_f) * vf
//   vy    = (l_f sin(beta_f) + l_r cos(beta_f) tan(beta_r)) / (l_f + l_r) * vf
//   omega = (sin(beta_f) - cos(beta_f) tan(beta_r)) / (l_f + l_r) * vf
// beta_f may exceed pi/2 (steering travel goes past 90 degrees, flipping the
// sign of vx); beta_r must stay inside (-pi/2, pi/2) or tan blows up.
BodyVelocity g_kin(const KinematicState& x, const VehicleParams& p);

// One-step transition over the kinematic state channels (vf, alpha_f, alpha_r).
// Implementations return the raw prediction; the rollout clamps vf at zero and
// advances delta through the exact servo update.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  virtual std::array<double, 3> predict(const KinematicState& x, const DriverInput& u,
                                        double ddelta) const = 0;
  virtual std::string name() const = 0;
};

// Sparse polynomial transition model over the candidate-term library: one
// coefficient list per target channel. c_ref feeds the throttle term.
struct SparseModel {
  std::vector<std::pair<VfTerm, double>> vf;
  std::vector<std::pair<SlipTerm, double>> af;
  std::vector<std::pair<SlipTerm, double>> ar;
  double c_ref = 2.033;
  double threshold = 0.0;    // metadata: threshold the fit used (0 = handwritten)
  bool support_frozen = false;  // a target hit rank deficiency and kept its previous support

  std::array<double, 3> eval(const TermArgs& a) const;
};

class SparseTransitionModel : public TransitionModel {
 public:
  explicit SparseTransitionModel(SparseModel model) : model_(std::move(model)) {}
  std::array<double, 3> predict(const KinematicState& x, const DriverInput& u,
                                double ddelta) const override;
  std::string name() const override { return "ksindy"; }
  const SparseModel& model() const { return model_; }

 private:
  SparseModel model_;
};

// Built-in reference transition model: the fixed coefficient set this toolkit
// ships for regression tests and as a data generator. A copy lives in
// data/reference_kinematic.model; a unit test keeps file and code in sync.
const SparseModel& reference_model();

// Text round trip for sparse models: `param`/`target term coefficient` lines,
// %.17g values, deterministic order.
void save_sparse_model(const SparseModel& m, const std::string& path);
SparseModel load_sparse_model(const std::string& path);

// One reference-model sample step including the vf clamp and the servo update.
KinematicState reference_step(const KinematicState& x, const DriverInput& u,
                              const VehicleParams& p);

// Closed-loop rollout from x0: predicts states over the input sequence, maps
// them through g_kin, and integrates the pose. Domain failures (tan blowup,
// non-finite prediction) surface as NumericError carrying the step index.
Trajectory rollout(const TransitionModel& m, const KinematicState& x0, const Pose& pose0,
                   const std::vector<double>& t, const std::vector<DriverInput>& inputs,
                   const VehicleParams& p);

}  // namespace stv
