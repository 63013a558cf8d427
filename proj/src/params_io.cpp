#include "stv/params_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stv {

const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names = {
      "delta_max", "rate_max", "tau",     "f_max", "k_t",       "c_ref",
      "k_b",       "mass",     "inertia_z", "l_f",   "l_r",       "c_alpha_f",
      "c_alpha_r", "f_max_f",  "f_max_r",   "r1",    "r2",        "v0"};
  return names;
}

double& param_field(VehicleParams& p, const std::string& name) {
  if (name == "delta_max") return p.steering.delta_max;
  if (name == "rate_max") return p.steering.rate_max;
  if (name == "tau") return p.steering.tau;
  if (name == "f_max") return p.motor.f_max;
  if (name == "k_t") return p.motor.k_t;
  if (name == "c_ref") return p.motor.c_ref;
  if (name == "k_b") return p.motor.k_b;
  if (name == "mass") return p.mass;
  if (name == "inertia_z") return p.inertia_z;
  if (name == "l_f") return p.l_f;
  if (name == "l_r") return p.l_r;
  if (name == "c_alpha_f") return p.tire.c_alpha_f;
  if (name == "c_alpha_r") return p.tire.c_alpha_r;
  if (name == "f_max_f") return p.tire.f_max_f;
  if (name == "f_max_r") return p.tire.f_max_r;
  if (name == "r1") return p.tire.r1;
  if (name == "r2") return p.tire.r2;
  if (name == "v0") return p.tire.v0;
  throw std::invalid_argument("unknown vehicle parameter: " + name);
}

double param_field(const VehicleParams& p, const std::string& name) {
  return param_field(const_cast<VehicleParams&>(p), name);
}

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string drop_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool parse_kv(const std::string& line, std::string& key, std::string& value) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return false;
  key = strip(line.substr(0, eq));
  value = unquote(strip(line.substr(eq + 1)));
  return !key.empty() && !value.empty();
}

double to_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad numeric value for " + ctx + ": " + s);
  }
}

}  // namespace

VehicleParams load_vehicle_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  VehicleParams p;
  std::string line;
  while (std::getline(in, line)) {
    line = strip(drop_comment(line));
    if (line.empty()) continue;
    std::string key, value;
    if (!parse_kv(line, key, value)) {
      throw std::invalid_argument("vehicle params: malformed line: " + line);
    }
    if (key == "legacy_tire_frame") {
      p.legacy_tire_frame = to_double(value, key) != 0.0;
    } else {
      param_field(p, key) = to_double(value, key);
    }
  }
  return p;
}

void save_vehicle_params(const VehicleParams& p, const std::string& path,
                         const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  char buf[32];
  for (const std::string& name : param_names()) {
    std::snprintf(buf, sizeof buf, "%.17g", param_field(p, name));
    out << name << " = " << buf << '\n';
  }
  if (p.legacy_tire_frame) out << "legacy_tire_frame = 1\n";
}

double ExcitationProfile::total_duration() const {
  double total = 0.0;
  for (const ProfileSegment& s : segments) total += s.duration;
  return total;
}

ExcitationProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  ExcitationProfile profile;
  ProfileSegment* seg = nullptr;
  std::string line;
  std::size_t lineno = 0;
  auto signal_key = [](SignalSpec& sig, const std::string& field, const std::string& value) {
    if (field.empty()) sig.kind = value;
    else if (field == "value") sig.value = to_double(value, field);
    else if (field == "from") sig.from = to_double(value, field);
    else if (field == "to") sig.to = to_double(value, field);
    else if (field == "amp") sig.amp = to_double(value, field);
    else if (field == "freq") sig.freq = to_double(value, field);
    else if (field == "phase") sig.phase = to_double(value, field);
    else if (field == "offset") sig.offset = to_double(value, field);
    else if (field == "period") sig.period = to_double(value, field);
    else if (field == "cutoff") sig.cutoff = to_double(value, field);
    else throw std::invalid_argument("profile: unknown signal field " + field);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(drop_comment(line));
    if (line.empty()) continue;
    if (line == "[[segment]]") {
      profile.segments.emplace_back();
      seg = &profile.segments.back();
      continue;
    }
    std::string key, value;
    if (!parse_kv(line, key, value)) {
      throw std::invalid_argument("profile: malformed line " + std::to_string(lineno));
    }
    if (!seg) {
      if (key == "seed") {
        profile.seed = static_cast<std::uint64_t>(std::stoull(value));
        continue;
      }
      throw std::invalid_argument("profile: key outside [[segment]] at line " +
                                  std::to_string(lineno));
    }
    if (key == "duration") {
      seg->duration = to_double(value, key);
    } else if (key == "us" || key == "um") {
      signal_key(key == "us" ? seg->us : seg->um, "", value);
    } else if (key.rfind("us_", 0) == 0) {
      signal_key(seg->us, key.substr(3), value);
    } else if (key.rfind("um_", 0) == 0) {
      signal_key(seg->um, key.substr(3), value);
    } else {
      throw std::invalid_argument("profile: unknown key " + key);
    }
  }
  if (profile.segments.empty()) throw std::invalid_argument("profile: no segments in " + path);
  for (const ProfileSegment& s : profile.segments) {
    if (!(s.duration > 0.0)) throw std::invalid_argument("profile: segment duration must be > 0");
  }
  return profile;
}

}  // namespace stv
