#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stv/models.hpp"
#include "stv/trajectory.hpp"

namespace stv {

struct EvalConfig {
  std::size_t start = 3;          // first predicted sample; earlier samples are context
  std::size_t reinit_period = 20; // re-seed interval for the segmented metric
  int timing_repeats = 5;         // median-of-n wall time of the full-horizon run
  bool timing = true;
};

struct ModelEval {
  std::string name;
  double nmse = 0.0;            // one closed-loop run over the whole window
  long diverged_at = -1;        // reference index where that run failed, -1 if none
  double reinit_nmse = 0.0;     // pooled over segments re-seeded every reinit_period
  long reinit_diverged = 0;     // segments that failed
  double time_ms = 0.0;         // median wall time of the full-horizon run
};

// Inverse-standard-deviation weights of the unflagged body velocities, the
// shared error scaling for every model under comparison.
Eigen::Vector3d velocity_weights(const std::vector<Trajectory>& train);

// Scores one model on the validation window. Flagged samples are excluded
// from the error sums (their velocities are reset by hand, not driven).
ModelEval evaluate_model(const Predictor& model, const Trajectory& val,
                         const Eigen::Vector3d& w, const EvalConfig& cfg);

// Scores several models: the error metrics may run concurrently across models,
// the timing pass always runs sequentially afterwards so wall times stay honest.
std::vector<ModelEval> evaluate_models(const std::vector<const Predictor*>& models,
                                       const Trajectory& val, const Eigen::Vector3d& w,
                                       const EvalConfig& cfg);

// Predicted trajectories over the scored window, for plotting and for
// recomputing the reported errors from files. `full` is one uninterrupted
// rollout; `reinit` re-seeds state and pose from the reference every
// reinit_period samples. Both are truncated at the first divergence.
struct ModelPrediction {
  Trajectory full;
  Trajectory reinit;
};
ModelPrediction predicted_trajectories(const Predictor& model, const Trajectory& val,
                                       const EvalConfig& cfg);

// The scored window of the reference itself (flags preserved), the companion
// file for the exports above.
Trajectory reference_window(const Trajectory& val, const EvalConfig& cfg);

// Deterministic report: identical runs produce identical text except for the
// time_ms entries.
nlohmann::ordered_json make_report(const std::string& dataset_path,
                                   const Eigen::Vector3d& w,
                                   const std::vector<ModelEval>& models,
                                   const EvalConfig& cfg);

}  // namespace stv
