#include "stv/sindy.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "stv/actuators.hpp"

namespace stv {

StlsqResult stlsq(const Eigen::VectorXd& target, const Eigen::MatrixXd& library,
                  double threshold, const Eigen::VectorXd& scales) {
  const Eigen::Index n = library.rows();
  const Eigen::Index m = library.cols();
  if (target.size() != n) throw std::invalid_argument("stlsq: target/library row mismatch");
  if (n <= m) throw std::invalid_argument("stlsq: need more samples than terms");
  if (scales.size() != m) throw std::invalid_argument("stlsq: scale count mismatch");
  if (!(threshold >= 0.0)) throw std::invalid_argument("stlsq: threshold must be >= 0");
  if (!target.allFinite() || !library.allFinite()) {
    throw std::invalid_argument("stlsq: non-finite input");
  }

  Eigen::MatrixXd scaled = library;
  std::vector<int> active;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scales[j] > 0.0 && std::isfinite(scales[j])) {
      scaled.col(j) /= scales[j];
      active.push_back(static_cast<int>(j));
    }
  }

  StlsqResult res;
  res.coeffs = Eigen::VectorXd::Zero(m);
  if (active.empty()) return res;

  constexpr int kMaxIters = 20;
  std::vector<int> previous = active;
  Eigen::VectorXd prev_b;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    res.iterations = iter + 1;
    Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) sub.col(j) = scaled.col(active[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    if (qr.rank() < static_cast<Eigen::Index>(active.size())) {
      // Pruning produced linearly dependent survivors: keep the previous
      // support and its estimate rather than an ill-posed refit.
      res.support_frozen = true;
      active = previous;
      if (prev_b.size() == 0) {
        throw std::invalid_argument("stlsq: library rank-deficient at full support");
      }
      res.coeffs.setZero();
      for (std::size_t j = 0; j < active.size(); ++j) {
        res.coeffs[active[j]] = prev_b[j] / scales[active[j]];
      }
      return res;
    }
    Eigen::VectorXd b = qr.solve(target);
    std::vector<int> next;
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (std::abs(b[j]) >= threshold) next.push_back(active[j]);
    }
    if (next.size() == active.size()) {
      res.coeffs.setZero();
      for (std::size_t j = 0; j < active.size(); ++j) {
        res.coeffs[active[j]] = b[j] / scales[active[j]];
      }
      return res;
    }
    previous = active;
    prev_b = b;
    active = next;
    if (active.empty()) return res;  // threshold wiped the model: all-zero coefficients
  }
  // Support still changing at the iteration cap; refit on the last set.
  Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(active.size()));
  for (std::size_t j = 0; j < active.size(); ++j) sub.col(j) = scaled.col(active[j]);
  Eigen::VectorXd b = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(sub).solve(target);
  res.coeffs.setZero();
  for (std::size_t j = 0; j < active.size(); ++j) {
    res.coeffs[active[j]] = b[j] / scales[active[j]];
  }
  return res;
}

KsindyData assemble_ksindy_data(const std::vector<Trajectory>& data, const VehicleParams& p) {
  std::size_t total = 0;
  for (const Trajectory& traj : data) {
    traj.validate();
    if (!traj.has_kin()) {
      throw std::invalid_argument("fit_ksindy: trajectories need kinematic labels");
    }
    if (traj.size() >= 2) total += traj.size() - 1;
  }
  KsindyData out;
  out.vf_lib.resize(static_cast<Eigen::Index>(total), kVfTermCount);
  out.slip_lib.resize(static_cast<Eigen::Index>(total), kSlipTermCount);
  out.targets.resize(static_cast<Eigen::Index>(total), 3);
  Eigen::Index row = 0;
  for (const Trajectory& traj : data) {
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      if (traj.is_flagged(k) || traj.is_flagged(k + 1)) continue;
      const KinematicState& x = traj.kin[k];
      const double ddelta = steering_rate(x.delta, traj.input[k].us, p.steering);
      const TermArgs a{x.vf, x.alpha_f, x.delta, ddelta, traj.input[k].um, p.motor.c_ref};
      for (int j = 0; j < kVfTermCount; ++j) {
        out.vf_lib(row, j) = eval_vf_term(static_cast<VfTerm>(j), a);
      }
      for (int j = 0; j < kSlipTermCount; ++j) {
        out.slip_lib(row, j) = eval_slip_term(static_cast<SlipTerm>(j), a);
      }
      out.targets(row, 0) = traj.kin[k + 1].vf;
      out.targets(row, 1) = traj.kin[k + 1].alpha_f;
      out.targets(row, 2) = traj.kin[k + 1].alpha_r;
      ++row;
    }
  }
  out.vf_lib.conservativeResize(row, Eigen::NoChange);
  out.slip_lib.conservativeResize(row, Eigen::NoChange);
  out.targets.conservativeResize(row, Eigen::NoChange);
  return out;
}

namespace {

Eigen::VectorXd column_stds(const Eigen::MatrixXd& m) {
  Eigen::VectorXd s(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    s[j] = std::sqrt((m.col(j).array() - mean).square().mean());
  }
  return s;
}

}  // namespace

SparseModel fit_ksindy(const std::vector<Trajectory>& data, double threshold,
                       const VehicleParams& p) {
  const KsindyData d = assemble_ksindy_data(data, p);
  if (d.targets.rows() <= kVfTermCount) {
    throw std::invalid_argument("fit_ksindy: not enough training pairs");
  }
  const Eigen::VectorXd vf_scales = column_stds(d.vf_lib);
  const Eigen::VectorXd slip_scales = column_stds(d.slip_lib);

  SparseModel m;
  m.vf.clear();
  m.c_ref = p.motor.c_ref;
  m.threshold = threshold;

  const StlsqResult rv = stlsq(d.targets.col(0), d.vf_lib, threshold, vf_scales);
  const StlsqResult ra = stlsq(d.targets.col(1), d.slip_lib, threshold, slip_scales);
  const StlsqResult rr = stlsq(d.targets.col(2), d.slip_lib, threshold, slip_scales);
  m.support_frozen = rv.support_frozen || ra.support_frozen || rr.support_frozen;
  for (int j = 0; j < kVfTermCount; ++j) {
    if (rv.coeffs[j] != 0.0) m.vf.emplace_back(static_cast<VfTerm>(j), rv.coeffs[j]);
  }
  for (int j = 0; j < kSlipTermCount; ++j) {
    if (ra.coeffs[j] != 0.0) m.af.emplace_back(static_cast<SlipTerm>(j), ra.coeffs[j]);
  }
  for (int j = 0; j < kSlipTermCount; ++j) {
    if (rr.coeffs[j] != 0.0) m.ar.emplace_back(static_cast<SlipTerm>(j), rr.coeffs[j]);
  }
  return m;
}

}  // namespace stv
