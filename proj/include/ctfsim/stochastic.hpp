#pragma once

#include <cstdint>
#include <vector>

#include "ctfsim/device_model.hpp"
#include "ctfsim/pulse_design.hpp"

namespace ctfsim {

// Separation between back-to-back ON pulses; far below every pulse width in
// use, it only keeps log10(t_gap) finite when the train has no OFF slot
// between two pulses.
inline constexpr double kEpsilonGap = 1e-9;

// N-slot Bernoulli bitstream; the encoded value is the probability of 1.
struct BitTrain {
  std::vector<std::uint8_t> bits;
  double pw = 0.0;
};

// Each slot is 1 with probability p, independently. ConfigError outside [0,1].
BitTrain encode(double p, int n_slots, std::uint64_t seed, double pw);

// Slot-wise AND; the ones-density multiplies the operands' probabilities.
// ConfigError on length or pulse-width mismatch.
BitTrain and_overlap(const BitTrain& a, const BitTrain& b);

int ones_count(const BitTrain& train);

// Walks the train pulse by pulse: every ON slot applies one dvt_step at the
// gap the policy dictates (True: eps + off-slots * pw since the previous ON
// pulse, saturated for the first pulse; Sparse: t_critical; Ideal: Q = 1),
// clamping Vt to the window after each pulse. Returns the final Vt.
// ConfigError when train.pw and fit.pw disagree.
double apply_train(double vt0, const BitTrain& train, GapPolicy policy,
                   const DeviceFit& fit, const VtWindow& window = VtWindow{});

struct UpdateStats {
  double mean_dvt = 0.0;
  double sigma_dvt = 0.0;
  double cv = 0.0;  // sigma/mean, 0 when the mean is 0
  int runs = 0;
};

// Monte-Carlo over encode -> apply_train from vt0; sample statistics of the
// total delta-Vt. Runs are seeded per-index substreams, so the result is
// independent of evaluation order. ConfigError when runs < 2.
UpdateStats update_stats(double p, int n_slots, GapPolicy policy, const DeviceFit& fit,
                         int runs, std::uint64_t seed,
                         const VtWindow& window = VtWindow{}, double vt0 = 0.0);

// Fractional error budget of dividing one ON-time into n pulses:
// stoch_err = k/sqrt(n) (bitstream encoding), vt_err = |delta_n - delta_1| /
// delta_1 against the single-pulse reference, total their sum. The
// compensated columns rebuild delta_n with each pulse extended by the trap
// time that Eq.-style accounting assigns (t_trap = pw - t_nv/n_req with
// t_nv = the full ON-time and n_req the pulse count that reaches the
// reference shift), the de-trap gap keeping Q saturated throughout.
struct ErrorFloorRow {
  int n_slots = 0;
  double stoch_err = 0.0;
  double vt_err = 0.0;
  double total_err = 0.0;
  double comp_vt_err = 0.0;
  double comp_total_err = 0.0;
};

ErrorFloorRow error_budget(int n_slots, const FitFamily& family, double t_on_total,
                           double k = 1.0, const VtWindow& window = VtWindow{},
                           double vt0 = 0.0);

std::vector<ErrorFloorRow> error_floor_sweep(const FitFamily& family, double t_on_total,
                                             int n_lo, int n_hi, double k = 1.0,
                                             const VtWindow& window = VtWindow{},
                                             double vt0 = 0.0);

}  // namespace ctfsim
