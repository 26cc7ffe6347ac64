#include "ctfsim/stochastic.hpp"

#include <cmath>
#include <string>

#include "ctfsim/errors.hpp"
#include "ctfsim/rng.hpp"

namespace ctfsim {

BitTrain encode(double p, int n_slots, std::uint64_t seed, double pw) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError("encode: probability " + std::to_string(p) + " outside [0, 1]");
  if (n_slots < 1) throw ConfigError("encode: n_slots must be >= 1");
  BitTrain t;
  t.pw = pw;
  t.bits.resize(static_cast<size_t>(n_slots));
  Rng rng(seed);
  for (auto& b : t.bits) b = rng.bernoulli(p) ? 1 : 0;
  return t;
}

BitTrain and_overlap(const BitTrain& a, const BitTrain& b) {
  if (a.bits.size() != b.bits.size())
    throw ConfigError("and_overlap: train lengths differ");
  if (a.pw != b.pw) throw ConfigError("and_overlap: train pulse widths differ");
  BitTrain out;
  out.pw = a.pw;
  out.bits.resize(a.bits.size());
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
  return out;
}

int ones_count(const BitTrain& train) {
  int n = 0;
  for (auto b : train.bits) n += b;
  return n;
}

double apply_train(double vt0, const BitTrain& train, GapPolicy policy,
                   const DeviceFit& fit, const VtWindow& window) {
  if (std::abs(train.pw - fit.pw) > 1e-12 * fit.pw)
    throw ConfigError("apply_train: train pulse width does not match the fit");
  double vt = vt0;
  long last_on = -1;  // slot index of the previous ON pulse; none yet
  for (size_t i = 0; i < train.bits.size(); ++i) {
    if (!train.bits[i]) continue;
    double dvt;
    if (policy == GapPolicy::Ideal) {
      dvt = p_ideal(vt, fit);
    } else {
      double t_gap;
      if (policy == GapPolicy::Sparse || last_on < 0) {
        // A train's first pulse has no predecessor: saturated branch.
        t_gap = fit.t_critical;
      } else {
        const double off_slots = static_cast<double>(static_cast<long>(i) - last_on - 1);
        t_gap = kEpsilonGap + off_slots * train.pw;
      }
      dvt = dvt_step(vt, t_gap, fit);
    }
    vt = window.clamp(vt + dvt);
    last_on = static_cast<long>(i);
  }
  return vt;
}

UpdateStats update_stats(double p, int n_slots, GapPolicy policy, const DeviceFit& fit,
                         int runs, std::uint64_t seed, const VtWindow& window, double vt0) {
  if (runs < 2) throw ConfigError("update_stats: needs runs >= 2");
  std::vector<double> dvt(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const BitTrain train = encode(p, n_slots, rng_stream(seed, static_cast<std::uint64_t>(r)),
                                  fit.pw);
    dvt[static_cast<size_t>(r)] = apply_train(vt0, train, policy, fit, window) - vt0;
  }
  // Compensated (Kahan) sums keep the aggregation order-insensitive.
  double sum = 0.0, comp = 0.0;
  for (double v : dvt) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double mean = sum / static_cast<double>(runs);
  double ss = 0.0, ssc = 0.0;
  for (double v : dvt) {
    const double d = (v - mean) * (v - mean);
    const double y = d - ssc;
    const double t = ss + y;
    ssc = (t - ss) - y;
    ss = t;
  }
  UpdateStats s;
  s.runs = runs;
  s.mean_dvt = mean;
  s.sigma_dvt = std::sqrt(ss / static_cast<double>(runs - 1));
  s.cv = mean != 0.0 ? s.sigma_dvt / mean : 0.0;
  return s;
}

namespace {

// Total shift of n saturated-gap pulses from vt0 (the pulse-division effect
// is characterized at sparse gaps; Q = its gauge value at t_critical).
double total_shift(int n, const DeviceFit& fit, const VtWindow& window, double vt0) {
  double vt = vt0;
  for (int i = 0; i < n; ++i) vt = window.clamp(vt + dvt_step(vt, fit.t_critical, fit));
  return vt - vt0;
}

// Pulses of this fit needed to reach vt0 + target (ModelValidityError when
// the step underflows before arriving; cannot happen for positive A within
// the window).
int pulses_to_reach(double target, const DeviceFit& fit, const VtWindow& window,
                    double vt0) {
  double vt = vt0;
  const double goal = vt0 + target;
  for (int n = 1; n <= 100000000; ++n) {
    const double step = dvt_step(vt, fit.t_critical, fit);
    vt = window.clamp(vt + step);
    if (vt >= goal - 1e-12) return n;
    if (step <= 0.0)
      throw ModelValidityError("compensation target unreachable: step vanished");
  }
  throw ModelValidityError("compensation target unreachable within iteration budget");
}

}  // namespace

ErrorFloorRow error_budget(int n_slots, const FitFamily& family, double t_on_total,
                           double k, const VtWindow& window, double vt0) {
  if (n_slots < 1) throw ConfigError("error_budget: n_slots must be >= 1");
  if (n_slots > kNMax)
    throw ModelValidityError("error_budget: n_slots beyond the valid regime");
  const double pw = t_on_total / static_cast<double>(n_slots);
  if (pw < kPwMin * (1.0 - 1e-12))
    throw ModelValidityError("error_budget: pulse width below the valid regime");

  // Reference: the undivided ON-time as a single pulse.
  const DeviceFit ref_fit = family.at_pw(t_on_total);
  const double delta_1 = total_shift(1, ref_fit, window, vt0);

  ErrorFloorRow row;
  row.n_slots = n_slots;
  row.stoch_err = k / std::sqrt(static_cast<double>(n_slots));

  const DeviceFit fit = family.at_pw(pw);
  const double delta_n = total_shift(n_slots, fit, window, vt0);
  row.vt_err = std::abs(delta_n - delta_1) / delta_1;

  // Compensation: extend each pulse by its trap time. n_req is the pulse
  // count at which this width reaches the reference shift, so the single
  // full-width pulse gets t_trap = 0 and the budget reduces to the
  // uncompensated one at n = 1.
  const int n_req = pulses_to_reach(delta_1, fit, window, vt0);
  const NonVolatileSpec nv{t_on_total, n_req};
  const double t_trap = trap_time(pw, nv);
  const DeviceFit comp_fit = family.at_pw(pw + t_trap);
  const double delta_n_comp = total_shift(n_slots, comp_fit, window, vt0);
  row.comp_vt_err = std::abs(delta_n_comp - delta_1) / delta_1;

  row.total_err = row.stoch_err + row.vt_err;
  row.comp_total_err = row.stoch_err + row.comp_vt_err;
  return row;
}

std::vector<ErrorFloorRow> error_floor_sweep(const FitFamily& family, double t_on_total,
                                             int n_lo, int n_hi, double k,
                                             const VtWindow& window, double vt0) {
  if (n_lo < 1 || n_hi < n_lo) throw ConfigError("error_floor_sweep: bad range");
  std::vector<ErrorFloorRow> rows;
  rows.reserve(static_cast<size_t>(n_hi - n_lo + 1));
  for (int n = n_lo; n <= n_hi; ++n)
    rows.push_back(error_budget(n, family, t_on_total, k, window, vt0));
  return rows;
}

}  // namespace ctfsim
