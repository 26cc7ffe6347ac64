#pragma once

#include <string>
#include <vector>

#include "ctfsim/device_model.hpp"
#include "ctfsim/kv.hpp"

namespace ctfsim {

// Compensation schemes for dividing one program ON-time into N pulses:
//   P1: plain division, no added times (gaps as the bitstream produces them)
//   P2: de-trap gap >= t_critical after every pulse (gap interaction removed)
//   P3: P2 plus per-pulse trap extension (state error compensated)
//   P4: P3 with the de-trap gap replaced by a short negative pulse
enum class SchemeId { P1, P2, P3, P4 };

// How inter-pulse gaps enter the device model when a train is applied:
// Ideal ignores the gap multiplier entirely (Q = 1), Sparse forces every gap
// to t_critical, True uses the gaps the bitstream actually produces.
enum class GapPolicy { Ideal, Sparse, True };

const char* to_string(SchemeId s);
const char* to_string(GapPolicy p);
SchemeId scheme_from_string(const std::string& s);     // ConfigError on unknown
GapPolicy policy_from_string(const std::string& s);    // ConfigError on unknown

// Effective non-volatile writing time t_nv, reached after n_req pulses of
// the nominal width; the remainder of each pulse feeds parasitic traps.
struct NonVolatileSpec {
  double t_nv = 2.0e-3;
  int n_req = 100;
};

struct PulseProgram {
  SchemeId scheme = SchemeId::P1;
  int n_slots = 1;
  double pw = 0.0;          // = t_on_total / n_slots
  double t_on_total = 0.0;  // kept exactly as given for exact latency
  double t_trap = 0.0;      // 0 for P1/P2
  double t_de_trap = 0.0;   // 0 for P1; gap for P2/P3; negative-pulse width for P4
  GapPolicy gap_policy = GapPolicy::True;
  bool has_negative_pulse = false;  // P4 only
};

inline constexpr int kNMax = 1000;        // pulse count beyond which Vt vanishes
inline constexpr double kPwMin = 2.5e-6;  // narrower pulses leave the valid regime

// Per-pulse trap-filling time pw - t_nv/n_req; ModelValidityError when the
// non-volatile share alone exceeds the pulse width.
double trap_time(double pw, const NonVolatileSpec& spec);

// Gap that guarantees the next pulse sees a saturated Q: t_critical, or the
// maximum t_critical over a family of fits. ConfigError on an empty set.
double detrap_time(const DeviceFit& fit);
double detrap_time(const std::vector<DeviceFit>& fits);

// negative_pw < 0 selects the default negative-pulse width (= pw) for P4.
PulseProgram build_program(SchemeId scheme, int n_slots, double t_on_total,
                           const DeviceFit& fit, const NonVolatileSpec& spec,
                           double negative_pw = -1.0);

// Seconds: t_on_total + n_slots * (t_trap + t_de_trap).
double total_latency(const PulseProgram& prog);
// Milliseconds with each component scaled separately, so the published
// per-sample figures come out bit-exact.
double total_latency_ms(const PulseProgram& prog);

kv::Record to_record(const PulseProgram& prog);

}  // namespace ctfsim
