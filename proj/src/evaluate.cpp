#include "stv/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "stv/frames.hpp"
#include "stv/metrics.hpp"

namespace stv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates weighted squared error over unflagged samples of one window.
struct ErrorSum {
  double sum = 0.0;
  long cols = 0;

  void add(const Eigen::Matrix3Xd& pred, const Trajectory& val, std::size_t start,
           const Eigen::Vector3d& w) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const std::size_t k = start + static_cast<std::size_t>(j);
      if (val.is_flagged(k)) continue;
      const BodyVelocity& m = val.vel[k];
      const double ex = w[0] * (pred(0, j) - m.vx);
      const double ey = w[1] * (pred(1, j) - m.vy);
      const double ew = w[2] * (pred(2, j) - m.omega);
      sum += ex * ex + ey * ey + ew * ew;
      ++cols;
    }
  }

  double nmse() const { return cols == 0 ? kInf : sum / (3.0 * static_cast<double>(cols)); }
};

void check_eval_window(const Predictor& model, const Trajectory& val, const EvalConfig& cfg) {
  if (cfg.start < std::max<std::size_t>(model.min_context(), 1) || cfg.start >= val.size()) {
    throw std::invalid_argument("evaluate: start index out of range");
  }
  if (cfg.reinit_period == 0) {
    throw std::invalid_argument("evaluate: reinit_period must be positive");
  }
}

ModelEval evaluate_metrics(const Predictor& model, const Trajectory& val,
                           const Eigen::Vector3d& w, const EvalConfig& cfg) {
  check_eval_window(model, val, cfg);
  ModelEval out;
  out.name = model.name();
  const std::size_t count = val.size() - cfg.start;

  const PredictionResult full = model.predict(val, cfg.start, count);
  out.diverged_at = full.diverged_at;
  if (full.diverged_at >= 0) {
    out.nmse = kInf;
  } else {
    ErrorSum err;
    err.add(full.vel, val, cfg.start, w);
    out.nmse = err.nmse();
  }

  ErrorSum reinit_err;
  for (std::size_t s = cfg.start; s < val.size(); s += cfg.reinit_period) {
    const std::size_t n = std::min(cfg.reinit_period, val.size() - s);
    const PredictionResult seg = model.predict(val, s, n);
    if (seg.diverged_at >= 0) {
      ++out.reinit_diverged;
    } else {
      reinit_err.add(seg.vel, val, s, w);
    }
  }
  out.reinit_nmse = out.reinit_diverged > 0 ? kInf : reinit_err.nmse();
  return out;
}

void time_model(const Predictor& model, const Trajectory& val, const EvalConfig& cfg,
                ModelEval& out) {
  const std::size_t count = val.size() - cfg.start;
  std::vector<double> times;
  for (int r = 0; r < std::max(cfg.timing_repeats, 1); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)model.predict(val, cfg.start, count);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  out.time_ms = times[times.size() / 2];
}

}  // namespace

Eigen::Vector3d velocity_weights(const std::vector<Trajectory>& train) {
  std::vector<const BodyVelocity*> rows;
  for (const Trajectory& traj : train) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (!traj.is_flagged(k)) rows.push_back(&traj.vel[k]);
    }
  }
  if (rows.size() < 2) throw std::invalid_argument("velocity_weights: not enough samples");
  Eigen::MatrixXd m(3, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) << rows[i]->vx, rows[i]->vy, rows[i]->omega;
  }
  return inverse_std_weights(m);
}

ModelEval evaluate_model(const Predictor& model, const Trajectory& val,
                         const Eigen::Vector3d& w, const EvalConfig& cfg) {
  val.validate();
  ModelEval out = evaluate_metrics(model, val, w, cfg);
  if (cfg.timing) time_model(model, val, cfg, out);
  return out;
}

std::vector<ModelEval> evaluate_models(const std::vector<const Predictor*>& models,
                                       const Trajectory& val, const Eigen::Vector3d& w,
                                       const EvalConfig& cfg) {
  val.validate();
  for (const Predictor* m : models) check_eval_window(*m, val, cfg);
  std::vector<ModelEval> results(models.size());
  const unsigned hw = std::thread::hardware_concurrency();
  const unsigned workers =
      std::min<unsigned>(hw == 0 ? 1 : hw, static_cast<unsigned>(models.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < models.size(); ++i) {
      results[i] = evaluate_metrics(*models[i], val, w, cfg);
    }
  } else {
    std::vector<std::thread> threads;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < models.size(); i = next.fetch_add(1)) {
          results[i] = evaluate_metrics(*models[i], val, w, cfg);
        }
      });
    }
    for (std::thread& t : threads) t.join();
  }
  if (cfg.timing) {
    for (std::size_t i = 0; i < models.size(); ++i) {
      time_model(*models[i], val, cfg, results[i]);
    }
  }
  return results;
}

namespace {

// Pose track for a predicted window: seeded one sample before `start`, then
// integrated with the predicted velocities.
void append_predicted(Trajectory& out, const Trajectory& val, std::size_t start,
                      const Eigen::Matrix3Xd& vel, long diverged_at) {
  Pose pose = integrate_pose(val.pose[start - 1], val.vel[start - 1], kSamplePeriod);
  for (Eigen::Index j = 0; j < vel.cols(); ++j) {
    const std::size_t k = start + static_cast<std::size_t>(j);
    if (diverged_at >= 0 && static_cast<long>(k) >= diverged_at) break;
    const BodyVelocity v{vel(0, j), vel(1, j), vel(2, j)};
    out.t.push_back(val.t[k]);
    out.pose.push_back(pose);
    out.vel.push_back(v);
    out.input.push_back(val.input[k]);
    pose = integrate_pose(pose, v, kSamplePeriod);
  }
}

}  // namespace

ModelPrediction predicted_trajectories(const Predictor& model, const Trajectory& val,
                                       const EvalConfig& cfg) {
  val.validate();
  check_eval_window(model, val, cfg);
  ModelPrediction out;
  const std::size_t count = val.size() - cfg.start;
  const PredictionResult full = model.predict(val, cfg.start, count);
  append_predicted(out.full, val, cfg.start, full.vel, full.diverged_at);

  for (std::size_t s = cfg.start; s < val.size(); s += cfg.reinit_period) {
    const std::size_t n = std::min(cfg.reinit_period, val.size() - s);
    const PredictionResult seg = model.predict(val, s, n);
    if (seg.diverged_at >= 0) break;  // a hole would break the uniform time axis
    append_predicted(out.reinit, val, s, seg.vel, -1);
  }
  return out;
}

Trajectory reference_window(const Trajectory& val, const EvalConfig& cfg) {
  val.validate();
  if (cfg.start >= val.size()) throw std::invalid_argument("reference_window: start past end");
  Trajectory out;
  for (std::size_t k = cfg.start; k < val.size(); ++k) {
    out.t.push_back(val.t[k]);
    out.pose.push_back(val.pose[k]);
    out.vel.push_back(val.vel[k]);
    out.input.push_back(val.input[k]);
    if (val.has_kin()) out.kin.push_back(val.kin[k]);
    if (val.is_flagged(k)) out.flagged.push_back(k - cfg.start);
  }
  return out;
}

nlohmann::ordered_json make_report(const std::string& dataset_path,
                                   const Eigen::Vector3d& w,
                                   const std::vector<ModelEval>& models,
                                   const EvalConfig& cfg) {
  nlohmann::ordered_json report;
  report["schema"] = "stvsim-eval-1";
  report["note"] =
      "Ground truth is the built-in rigid-body simulator with the shipped "
      "parameter table; every score is relative to that oracle, not to any "
      "externally measured vehicle.";
  report["dataset"] = dataset_path;
  report["eval_start_index"] = cfg.start;
  report["reinit_period"] = cfg.reinit_period;
  report["weights"] = {w[0], w[1], w[2]};
  report["env"] = {{"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"sample_period_s", kSamplePeriod}};
  auto number_or_null = [](double v) {
    nlohmann::ordered_json j;
    if (std::isfinite(v)) j = v;
    return j;  // null for inf/nan: JSON has no representation for them
  };
  report["models"] = nlohmann::ordered_json::array();
  for (const ModelEval& m : models) {
    nlohmann::ordered_json entry;
    entry["name"] = m.name;
    entry["nmse"] = number_or_null(m.nmse);
    entry["nmse_e3"] = number_or_null(1e3 * m.nmse);
    if (m.diverged_at >= 0) entry["diverged_at"] = m.diverged_at;
    entry["reinit_nmse"] = number_or_null(m.reinit_nmse);
    entry["reinit_nmse_e3"] = number_or_null(1e3 * m.reinit_nmse);
    entry["reinit_diverged_segments"] = m.reinit_diverged;
    if (cfg.timing) entry["time_ms"] = m.time_ms;
    report["models"].push_back(std::move(entry));
  }
  return report;
}

}  // namespace stv
