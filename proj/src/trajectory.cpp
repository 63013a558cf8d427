#include "stv/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace stv {

namespace {

constexpr const char* kHeader = "t,px,py,theta,vx,vy,omega,vf,alpha_f,alpha_r,delta,us,um";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_field(const std::string& s, const char* name, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("trajectory csv: bad " + std::string(name) + " at line " +
                                std::to_string(line));
  }
  return v;
}

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

}  // namespace

bool Trajectory::is_flagged(std::size_t k) const {
  return std::find(flagged.begin(), flagged.end(), k) != flagged.end();
}

void Trajectory::validate() const {
  const std::size_t n = t.size();
  if (n == 0) throw std::invalid_argument("trajectory: empty");
  if (pose.size() != n || vel.size() != n || input.size() != n) {
    throw std::invalid_argument("trajectory: column length mismatch");
  }
  if (!kin.empty() && kin.size() != n) {
    throw std::invalid_argument("trajectory: partial kinematic labels");
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (std::abs(t[k + 1] - t[k] - kSamplePeriod) > 1e-9) {
      throw std::invalid_argument("trajectory: sampling must be uniform 10 Hz (sample " +
                                  std::to_string(k + 1) + ")");
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const bool finite = std::isfinite(t[k]) && std::isfinite(pose[k].px) &&
                        std::isfinite(pose[k].py) && std::isfinite(pose[k].theta) &&
                        std::isfinite(vel[k].vx) && std::isfinite(vel[k].vy) &&
                        std::isfinite(vel[k].omega) && std::isfinite(input[k].us) &&
                        std::isfinite(input[k].um);
    if (!finite) {
      throw std::invalid_argument("trajectory: non-finite value at sample " + std::to_string(k));
    }
    if (std::abs(input[k].um) > 1.0 + 1e-9) {
      throw std::invalid_argument("trajectory: |um| > 1 at sample " + std::to_string(k));
    }
    if (!kin.empty()) {
      const KinematicState& x = kin[k];
      if (!std::isfinite(x.vf) || !std::isfinite(x.alpha_f) || !std::isfinite(x.alpha_r) ||
          !std::isfinite(x.delta)) {
        throw std::invalid_argument("trajectory: non-finite label at sample " + std::to_string(k));
      }
      if (x.vf < 0.0) {
        throw std::invalid_argument("trajectory: vf < 0 at sample " + std::to_string(k));
      }
      if (std::abs(x.alpha_f) >= M_PI_2 || std::abs(x.alpha_r) >= M_PI_2) {
        throw std::invalid_argument("trajectory: slip angle out of (-pi/2, pi/2) at sample " +
                                    std::to_string(k));
      }
    }
  }
  for (std::size_t idx : flagged) {
    if (idx >= n) throw std::invalid_argument("trajectory: flagged index out of range");
  }
}

void save_csv(const Trajectory& traj, const std::string& path) {
  traj.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kHeader << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << fmt(traj.t[k]) << ',' << fmt(traj.pose[k].px) << ',' << fmt(traj.pose[k].py) << ','
        << fmt(traj.pose[k].theta) << ',' << fmt(traj.vel[k].vx) << ',' << fmt(traj.vel[k].vy)
        << ',' << fmt(traj.vel[k].omega) << ',';
    if (traj.has_kin()) {
      out << fmt(traj.kin[k].vf) << ',' << fmt(traj.kin[k].alpha_f) << ','
          << fmt(traj.kin[k].alpha_r) << ',' << fmt(traj.kin[k].delta) << ',';
    } else {
      out << ",,,,";
    }
    out << fmt(traj.input[k].us) << ',' << fmt(traj.input[k].um) << '\n';
  }
  out.close();
  if (!traj.flagged.empty()) {
    nlohmann::ordered_json meta;
    meta["flagged"] = traj.flagged;
    std::ofstream mout(meta_path(path));
    if (!mout) throw std::runtime_error("cannot write " + meta_path(path));
    mout << meta.dump(2) << '\n';
  }
}

Trajectory load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::invalid_argument("trajectory csv: unexpected header in " + path);
  }
  Trajectory traj;
  std::size_t lineno = 1;
  bool kin_seen = false, kin_missing = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.push_back("");
    if (f.size() != 13) {
      throw std::invalid_argument("trajectory csv: expected 13 fields at line " +
                                  std::to_string(lineno));
    }
    traj.t.push_back(parse_field(f[0], "t", lineno));
    traj.pose.push_back({parse_field(f[1], "px", lineno), parse_field(f[2], "py", lineno),
                         parse_field(f[3], "theta", lineno)});
    traj.vel.push_back({parse_field(f[4], "vx", lineno), parse_field(f[5], "vy", lineno),
                        parse_field(f[6], "omega", lineno)});
    const bool have_kin = !f[7].empty() || !f[8].empty() || !f[9].empty() || !f[10].empty();
    if (have_kin) {
      kin_seen = true;
      traj.kin.push_back({parse_field(f[7], "vf", lineno), parse_field(f[8], "alpha_f", lineno),
                          parse_field(f[9], "alpha_r", lineno),
                          parse_field(f[10], "delta", lineno)});
    } else {
      kin_missing = true;
    }
    traj.input.push_back({parse_field(f[11], "us", lineno), parse_field(f[12], "um", lineno)});
  }
  if (kin_seen && kin_missing) {
    throw std::invalid_argument("trajectory csv: kinematic labels must cover every sample");
  }
  std::ifstream min(meta_path(path));
  if (min) {
    nlohmann::json meta = nlohmann::json::parse(min);
    if (meta.contains("flagged")) {
      traj.flagged = meta["flagged"].get<std::vector<std::size_t>>();
    }
  }
  traj.validate();
  return traj;
}

namespace {

Trajectory slice(const Trajectory& traj, std::size_t begin, std::size_t end) {
  Trajectory out;
  out.t.assign(traj.t.begin() + begin, traj.t.begin() + end);
  out.pose.assign(traj.pose.begin() + begin, traj.pose.begin() + end);
  out.vel.assign(traj.vel.begin() + begin, traj.vel.begin() + end);
  out.input.assign(traj.input.begin() + begin, traj.input.begin() + end);
  if (traj.has_kin()) out.kin.assign(traj.kin.begin() + begin, traj.kin.begin() + end);
  for (std::size_t idx : traj.flagged) {
    if (idx >= begin && idx < end) out.flagged.push_back(idx - begin);
  }
  return out;
}

}  // namespace

Split split_dataset(const Trajectory& traj, double val_seconds, double val_start) {
  traj.validate();
  const std::size_t n = traj.size();
  const auto n_val = static_cast<std::size_t>(std::llround(val_seconds / kSamplePeriod));
  if (n_val == 0) throw std::invalid_argument("split_dataset: empty validation window");
  if (n_val >= n) {
    throw std::invalid_argument("split_dataset: validation window must leave training data");
  }
  std::size_t start;
  if (val_start < 0.0) {
    start = n - n_val;
  } else {
    start = static_cast<std::size_t>(std::llround(val_start / kSamplePeriod));
    if (start + n_val > n) {
      throw std::invalid_argument("split_dataset: validation window exceeds data");
    }
  }
  Split split;
  if (start > 0) split.train.push_back(slice(traj, 0, start));
  split.validation = slice(traj, start, start + n_val);
  if (start + n_val < n) split.train.push_back(slice(traj, start + n_val, n));
  if (split.train.empty()) {
    throw std::invalid_argument("split_dataset: no training data left");
  }
  return split;
}

}  // namespace stv
