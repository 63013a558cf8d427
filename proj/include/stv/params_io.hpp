#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stv/newton_euler.hpp"

namespace stv {

// Named access to every scalar field of VehicleParams, in canonical order.
const std::vector<std::string>& param_names();
double& param_field(VehicleParams& p, const std::string& name);
double param_field(const VehicleParams& p, const std::string& name);

// Plain-text `key = value` parameter files with `#` comments.
VehicleParams load_vehicle_params(const std::string& path);
void save_vehicle_params(const VehicleParams& p, const std::string& path,
                         const std::string& header_comment = "");

// Driver-command pattern for one profile segment. Supported kinds:
//   constant(value), ramp(from, to), sinusoid(amp, freq, phase, offset),
//   bangbang(amp, period, offset), noise(amp, cutoff)
struct SignalSpec {
  std::string kind = "constant";
  double value = 0.0;
  double from = 0.0, to = 0.0;
  double amp = 0.0, freq = 0.0, phase = 0.0, offset = 0.0;
  double period = 1.0;
  double cutoff = 1.0;
};

struct ProfileSegment {
  double duration = 0.0;  // seconds
  SignalSpec us;
  SignalSpec um;
};

// Excitation profile: an optional top-level `seed = N` line followed by
// [[segment]] blocks with `key = value` lines.
struct ExcitationProfile {
  std::vector<ProfileSegment> segments;
  std::uint64_t seed = 1;  // default noise seed; the CLI --seed overrides it
  double total_duration() const;
};

ExcitationProfile load_profile(const std::string& path);

}  // namespace stv
