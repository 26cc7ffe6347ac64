#pragma once

#include <string>
#include <vector>

#include "ctfsim/kv.hpp"

namespace ctfsim {

// Per-pulse threshold-voltage update model of a charge-trap-flash cell under
// program-time division:
//
//   dVt/dn = P(Vt) * Q(t_gap)
//   P(Vt)  = A * exp(B * Vt)                        (state dependence)
//   Q(t)   = C1 * log10(t) + C2   for t <  t_critical
//            C1 * log10(t_critical) + C2 otherwise  (gap dependence)
//
// Q is clamped at >= 0: a program pulse never reverses Vt. A is volts per
// pulse, B is 1/volts (negative for a saturating device), t in seconds.
//
// Only the product A*Q is observable, so fitted constants are stored in the
// gauge Q(t_critical) = 1; A then equals the saturated-gap step at Vt = 0.
struct DeviceFit {
  double pw = 0.0;          // programming pulse width this fit belongs to
  double a_coeff = 0.0;     // A > 0
  double b_coeff = 0.0;     // B
  double c1 = 0.0;          // slope of Q per decade of gap
  double c2 = 0.0;          // Q offset
  double t_critical = 0.0;  // gap beyond which Q is flat
};

// Physical Vt range; device states are confined to it.
struct VtWindow {
  double lo = 0.0;
  double hi = 4.0;

  double clamp(double vt) const { return vt < lo ? lo : (vt > hi ? hi : vt); }
  double width() const { return hi - lo; }
};

double p_ideal(double vt, const DeviceFit& fit);
// ConfigError when t_gap <= 0.
double q_gap(double t_gap, const DeviceFit& fit);
double dvt_step(double vt, double t_gap, const DeviceFit& fit);

// Rescales (A, C1, C2) into the Q(t_critical) = 1 gauge; every dvt_step
// value is unchanged. ModelValidityError if the saturated Q is not positive.
DeviceFit normalized(const DeviceFit& fit);

// One measured per-pulse shift.
struct FitSample {
  double vt = 0.0;
  double t_gap = 0.0;
  double pw = 0.0;
  double dvt_observed = 0.0;
};

// Least-squares recovery of (A, B, C1, C2, t_critical) from samples sharing
// one pulse width. Needs >= 2 saturated-gap samples at distinct vt (fixes
// A, B on the log scale) and >= 2 sub-critical samples at distinct gaps
// (fixes C1, C2); throws CalibrationError naming the missing regime.
// t_critical is scanned over the observed gaps unless a positive hint pins
// it. The result is in the Q(t_critical) = 1 gauge.
DeviceFit fit_from_samples(const std::vector<FitSample>& samples,
                           double t_critical_hint = 0.0);

// kv record field names are the serialization schema; keep them stable.
kv::Record to_record(const DeviceFit& fit);
DeviceFit fit_from_record(const kv::Record& rec);

// Calibrated fits of one device across its measured pulse widths, with
// interpolation between them: A follows a power law in pw (linear in
// log-log), C1 is linear in log10(pw) and held at the end values outside the
// anchors, B and t_critical are shared, and C2 keeps the fit in the
// Q(t_critical) = 1 gauge.
class FitFamily {
 public:
  explicit FitFamily(std::vector<DeviceFit> fits);  // ConfigError if empty

  static FitFamily load(const std::string& path);
  static FitFamily from_document(const kv::Document& doc);
  // The calibrated fixture shipped with the repo (data/device_fits.kv).
  static const FitFamily& builtin_default();

  DeviceFit at_pw(double pw) const;
  const std::vector<DeviceFit>& fits() const { return fits_; }
  double max_t_critical() const;
  kv::Document to_document() const;

 private:
  std::vector<DeviceFit> fits_;  // sorted by pw ascending
};

}  // namespace ctfsim
