#include "ctfsim/pulse_design.hpp"

#include <algorithm>
#include <cmath>

#include "ctfsim/errors.hpp"

namespace ctfsim {

const char* to_string(SchemeId s) {
  switch (s) {
    case SchemeId::P1: return "p1";
    case SchemeId::P2: return "p2";
    case SchemeId::P3: return "p3";
    case SchemeId::P4: return "p4";
  }
  return "?";
}

const char* to_string(GapPolicy p) {
  switch (p) {
    case GapPolicy::Ideal: return "ideal";
    case GapPolicy::Sparse: return "sparse";
    case GapPolicy::True: return "true";
  }
  return "?";
}

SchemeId scheme_from_string(const std::string& s) {
  if (s == "p1" || s == "P1") return SchemeId::P1;
  if (s == "p2" || s == "P2") return SchemeId::P2;
  if (s == "p3" || s == "P3") return SchemeId::P3;
  if (s == "p4" || s == "P4") return SchemeId::P4;
  throw ConfigError("unknown scheme '" + s + "' (expected p1|p2|p3|p4)");
}

GapPolicy policy_from_string(const std::string& s) {
  if (s == "ideal") return GapPolicy::Ideal;
  if (s == "sparse") return GapPolicy::Sparse;
  if (s == "true") return GapPolicy::True;
  throw ConfigError("unknown gap policy '" + s + "' (expected ideal|sparse|true)");
}

double trap_time(double pw, const NonVolatileSpec& spec) {
  if (spec.t_nv <= 0.0 || spec.n_req < 1)
    throw ConfigError("non-volatile spec needs t_nv > 0 and n_req >= 1");
  const double share = spec.t_nv / static_cast<double>(spec.n_req);
  if (share > pw)
    throw ModelValidityError(
        "infeasible compensation: per-pulse non-volatile time exceeds the pulse width");
  return pw - share;
}

double detrap_time(const DeviceFit& fit) { return fit.t_critical; }

double detrap_time(const std::vector<DeviceFit>& fits) {
  if (fits.empty()) throw ConfigError("detrap_time over an empty fit set is undefined");
  double m = 0.0;
  for (const auto& f : fits) m = std::max(m, f.t_critical);
  return m;
}

PulseProgram build_program(SchemeId scheme, int n_slots, double t_on_total,
                           const DeviceFit& fit, const NonVolatileSpec& spec,
                           double negative_pw) {
  if (n_slots < 1) throw ConfigError("build_program: n_slots must be >= 1");
  if (t_on_total <= 0.0) throw ConfigError("build_program: t_on_total must be positive");
  if (n_slots > kNMax)
    throw ModelValidityError("pulse count " + std::to_string(n_slots) +
                             " beyond the valid regime (max " + std::to_string(kNMax) + ")");
  const double pw = t_on_total / static_cast<double>(n_slots);
  if (pw < kPwMin * (1.0 - 1e-12))
    throw ModelValidityError("pulse width below the valid regime (Vt vanishes)");

  PulseProgram p;
  p.scheme = scheme;
  p.n_slots = n_slots;
  p.pw = pw;
  p.t_on_total = t_on_total;
  switch (scheme) {
    case SchemeId::P1:
      p.gap_policy = GapPolicy::True;
      break;
    case SchemeId::P2:
      p.t_de_trap = detrap_time(fit);
      p.gap_policy = GapPolicy::Sparse;
      break;
    case SchemeId::P3:
      p.t_trap = trap_time(pw, spec);
      if (p.t_trap <= 0.0)
        throw ModelValidityError(
            "P3 degenerates to P2: computed trap time is zero; build P2 instead");
      p.t_de_trap = detrap_time(fit);
      p.gap_policy = GapPolicy::Sparse;
      break;
    case SchemeId::P4:
      p.t_trap = trap_time(pw, spec);
      if (p.t_trap <= 0.0)
        throw ModelValidityError("P4 requires a positive trap time");
      // The negative pulse empties the parasitic traps, so the next pulse
      // sees a saturated gap multiplier without waiting out t_critical.
      p.t_de_trap = negative_pw < 0.0 ? pw : negative_pw;
      p.has_negative_pulse = true;
      p.gap_policy = GapPolicy::Sparse;
      break;
  }
  return p;
}

double total_latency(const PulseProgram& prog) {
  return prog.t_on_total +
         static_cast<double>(prog.n_slots) * (prog.t_trap + prog.t_de_trap);
}

double total_latency_ms(const PulseProgram& prog) {
  return prog.t_on_total * 1e3 +
         static_cast<double>(prog.n_slots) * (prog.t_trap * 1e3 + prog.t_de_trap * 1e3);
}

kv::Record to_record(const PulseProgram& prog) {
  kv::Record r;
  r.set("scheme", to_string(prog.scheme));
  r.set_int("n_slots", prog.n_slots);
  r.set_double("pw_s", prog.pw);
  r.set_double("t_on_s", prog.t_on_total);
  r.set_double("t_trap_s", prog.t_trap);
  r.set_double("t_de_trap_s", prog.t_de_trap);
  r.set("gap_policy", to_string(prog.gap_policy));
  r.set("has_negative_pulse", prog.has_negative_pulse ? "1" : "0");
  return r;
}

}  // namespace ctfsim
