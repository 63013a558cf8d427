#include "stv/library.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace stv {

double eval_vf_term(VfTerm term, const TermArgs& a) {
  const double throttle = std::max(a.c_ref * a.um - a.vf, 0.0);
  const double brake = std::min(a.um, 0.0);
  switch (term) {
    case VfTerm::kThrottle: return throttle;
    case VfTerm::kThrottleVf: return throttle * a.vf;
    case VfTerm::kBrakeVf: return brake * a.vf;
    case VfTerm::kBrakeVf2: return brake * a.vf * a.vf;
    case VfTerm::kVf: return a.vf;
    case VfTerm::kVf2: return a.vf * a.vf;
    case VfTerm::kVf3: return a.vf * a.vf * a.vf;
    case VfTerm::kAf2: return a.af * a.af;
    case VfTerm::kVfAbsAf: return a.vf * std::abs(a.af);
    case VfTerm::kVf2AbsAf: return a.vf * a.vf * std::abs(a.af);
    case VfTerm::kVfAbsDelta: return a.vf * std::abs(a.delta);
    case VfTerm::kVfAbsDdelta: return a.vf * std::abs(a.ddelta);
    case VfTerm::kVf2AbsDelta: return a.vf * a.vf * std::abs(a.delta);
    case VfTerm::kVf2AbsDdelta: return a.vf * a.vf * std::abs(a.ddelta);
    case VfTerm::kVfAbsDeltaAbsAf: return a.vf * std::abs(a.delta) * std::abs(a.af);
    case VfTerm::kVfAbsDdeltaAbsAf: return a.vf * std::abs(a.ddelta) * std::abs(a.af);
    case VfTerm::kCount: break;
  }
  throw std::invalid_argument("eval_vf_term: bad term id");
}

double eval_slip_term(SlipTerm term, const TermArgs& a) {
  switch (term) {
    case SlipTerm::kAf: return a.af;
    case SlipTerm::kVfDelta: return a.vf * a.delta;
    case SlipTerm::kVfDeltaAbsDelta: return a.vf * a.delta * std::abs(a.delta);
    case SlipTerm::kVfDeltaAbsDdelta: return a.vf * a.delta * std::abs(a.ddelta);
    case SlipTerm::kVf2Delta: return a.vf * a.vf * a.delta;
    case SlipTerm::kVfDelta3: return a.vf * a.delta * a.delta * a.delta;
    case SlipTerm::kVfDeltaDdelta2: return a.vf * a.delta * a.ddelta * a.ddelta;
    case SlipTerm::kVfDdelta: return a.vf * a.ddelta;
    case SlipTerm::kVfDdeltaAbsDelta: return a.vf * a.ddelta * std::abs(a.delta);
    case SlipTerm::kVfDdeltaAbsDdelta: return a.vf * a.ddelta * std::abs(a.ddelta);
    case SlipTerm::kVf2Ddelta: return a.vf * a.vf * a.ddelta;
    case SlipTerm::kVfDdeltaDelta2: return a.vf * a.ddelta * a.delta * a.delta;
    case SlipTerm::kVfDdelta3: return a.vf * a.ddelta * a.ddelta * a.ddelta;
    case SlipTerm::kCount: break;
  }
  throw std::invalid_argument("eval_slip_term: bad term id");
}

namespace {

const std::array<std::string, kVfTermCount> kVfNames = {
    "throttle",      "throttle*vf",    "brake*vf",       "brake*vf^2",
    "vf",            "vf^2",           "vf^3",           "af^2",
    "vf*|af|",       "vf^2*|af|",      "vf*|delta|",     "vf*|ddelta|",
    "vf^2*|delta|",  "vf^2*|ddelta|",  "vf*|delta|*|af|", "vf*|ddelta|*|af|"};

const std::array<std::string, kSlipTermCount> kSlipNames = {
    "af",
    "vf*delta",
    "vf*delta*|delta|",
    "vf*delta*|ddelta|",
    "vf^2*delta",
    "vf*delta^3",
    "vf*delta*ddelta^2",
    "vf*ddelta",
    "vf*ddelta*|delta|",
    "vf*ddelta*|ddelta|",
    "vf^2*ddelta",
    "vf*ddelta*delta^2",
    "vf*ddelta^3"};

}  // namespace

const std::string& vf_term_name(VfTerm term) {
  return kVfNames.at(static_cast<std::size_t>(term));
}

const std::string& slip_term_name(SlipTerm term) {
  return kSlipNames.at(static_cast<std::size_t>(term));
}

VfTerm vf_term_from_name(const std::string& name) {
  const auto it = std::find(kVfNames.begin(), kVfNames.end(), name);
  if (it == kVfNames.end()) throw std::invalid_argument("unknown vf term: " + name);
  return static_cast<VfTerm>(it - kVfNames.begin());
}

SlipTerm slip_term_from_name(const std::string& name) {
  const auto it = std::find(kSlipNames.begin(), kSlipNames.end(), name);
  if (it == kSlipNames.end()) throw std::invalid_argument("unknown slip term: " + name);
  return static_cast<SlipTerm>(it - kSlipNames.begin());
}

}  // namespace stv
