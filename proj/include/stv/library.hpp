#pragma once

#include <string>
#include <vector>

namespace stv {

// Inputs every candidate term may read. ddelta is the servo rate at the sample,
// reconstructed from (delta, us); c_ref is the motor velocity reference that
// scales the throttle term.
struct TermArgs {
  double vf = 0.0;
  double af = 0.0;
  double delta = 0.0;
  double ddelta = 0.0;
  double um = 0.0;
  double c_ref = 2.033;
};

// Candidate terms for the front-speed target. Every term except the throttle
// pair vanishes at vf = 0, af = 0; drag-like terms are even under mirroring.
enum class VfTerm {
  kThrottle,          // max(c_ref*um - vf, 0)
  kThrottleVf,        // max(c_ref*um - vf, 0) * vf
  kBrakeVf,           // min(um, 0) * vf
  kBrakeVf2,          // min(um, 0) * vf^2
  kVf,
  kVf2,
  kVf3,
  kAf2,               // af^2
  kVfAbsAf,           // vf * |af|
  kVf2AbsAf,
  kVfAbsDelta,
  kVfAbsDdelta,
  kVf2AbsDelta,
  kVf2AbsDdelta,
  kVfAbsDeltaAbsAf,   // vf * |delta| * |af|
  kVfAbsDdeltaAbsAf,  // vf * |ddelta| * |af|
  kCount
};

// Candidate terms for the slip-angle targets. Every term is odd under the
// mirror map (delta, ddelta, af, ar) -> -(delta, ddelta, af, ar), so fitted
// slip models inherit mirror symmetry structurally.
enum class SlipTerm {
  kAf,
  kVfDelta,
  kVfDeltaAbsDelta,
  kVfDeltaAbsDdelta,
  kVf2Delta,
  kVfDelta3,
  kVfDeltaDdelta2,
  kVfDdelta,
  kVfDdeltaAbsDelta,
  kVfDdeltaAbsDdelta,
  kVf2Ddelta,
  kVfDdeltaDelta2,
  kVfDdelta3,
  kCount
};

inline constexpr int kVfTermCount = static_cast<int>(VfTerm::kCount);
inline constexpr int kSlipTermCount = static_cast<int>(SlipTerm::kCount);

double eval_vf_term(VfTerm term, const TermArgs& a);
double eval_slip_term(SlipTerm term, const TermArgs& a);

const std::string& vf_term_name(VfTerm term);
const std::string& slip_term_name(SlipTerm term);

// Reverse lookups for the text model format; throw std::invalid_argument on
// unknown names.
VfTerm vf_term_from_name(const std::string& name);
SlipTerm slip_term_from_name(const std::string& name);

}  // namespace stv
