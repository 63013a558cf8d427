#pragma once

#include <string>
#include <vector>

#include "stv/types.hpp"

namespace stv {

// A uniformly sampled 10 Hz recording of one drive. Pose, body velocity and
// driver inputs are always present; kinematic labels (vf, slips, delta) are
// optional and either absent or present for every sample. `flagged` lists
// sample indices that must not feed training pairs (wall-bounce resets).
struct Trajectory {
  std::vector<double> t;
  std::vector<Pose> pose;
  std::vector<BodyVelocity> vel;
  std::vector<DriverInput> input;
  std::vector<KinematicState> kin;  // empty, or one entry per sample
  std::vector<std::size_t> flagged;

  std::size_t size() const { return t.size(); }
  bool has_kin() const { return !kin.empty(); }
  bool is_flagged(std::size_t k) const;

  // Checks uniform 10 Hz sampling, matching column lengths, finite values,
  // and label ranges. Throws std::invalid_argument on violation.
  void validate() const;
};

// CSV with the fixed header t,px,py,theta,vx,vy,omega,vf,alpha_f,alpha_r,delta,us,um.
// Kinematic columns are written empty when labels are absent. Numbers use %.17g so
// a load/save round trip is byte-identical. Flagged indices travel in a sidecar
// JSON file `<path>.meta.json`, written only when non-empty metadata exists and
// loaded when present.
void save_csv(const Trajectory& traj, const std::string& path);
Trajectory load_csv(const std::string& path);

// Splits off a validation window of `val_seconds` starting at `val_start` seconds
// into the data (negative start selects the final window). The remaining samples
// form one or two contiguous training pieces; every piece is retained.
struct Split {
  std::vector<Trajectory> train;
  Trajectory validation;
};
Split split_dataset(const Trajectory& traj, double val_seconds, double val_start = -1.0);

}  // namespace stv
