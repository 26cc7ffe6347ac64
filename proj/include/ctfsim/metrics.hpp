#pragma once

#include <string>
#include <vector>

#include "ctfsim/pulse_design.hpp"
#include "ctfsim/trainer.hpp"

namespace ctfsim {

// Energy bookkeeping is deliberately simple: programming dominates, and each
// update pulse costs the same charge, so energy per training sample is the
// average pulse count per device times the per-pulse energy. e_pulse default
// is calibrated so the default N = 500 true-gap run lands at the measured
// scale of tens of femtojoules per device per sample.
struct EnergyModel {
  double e_pulse = 7.0e-14;  // joules per update pulse
};

double energy_per_sample(double avg_pulses_per_device_sample,
                         const EnergyModel& model = EnergyModel{});

// Per-sample programming latency of one weight update under a pulse program.
double latency_per_sample_ms(const PulseProgram& prog);

// One TSV row per report: accuracy with spread, write noise, latency, pulse
// and energy accounting. Hardware columns are n/a for the ideal baseline.
std::string comparative_table(const std::vector<TrainReport>& reports);

const char* version_string();

}  // namespace ctfsim
