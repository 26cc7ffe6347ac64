#include "ctfsim/metrics.hpp"

#include "ctfsim/errors.hpp"
#include "ctfsim/kv.hpp"

namespace ctfsim {

double energy_per_sample(double avg_pulses_per_device_sample,
                         const EnergyModel& model) {
  if (!(model.e_pulse > 0.0)) throw ConfigError("e_pulse must be positive");
  if (avg_pulses_per_device_sample < 0.0) {
    throw ConfigError("average pulse count cannot be negative");
  }
  return avg_pulses_per_device_sample * model.e_pulse;
}

double latency_per_sample_ms(const PulseProgram& prog) {
  return total_latency_ms(prog);
}

std::string comparative_table(const std::vector<TrainReport>& reports) {
  std::string out =
      "dataset\tpolicy\tn_slots\taccuracy_mean_pct\taccuracy_sigma_pct\t"
      "sigma_dvt\tlatency_ms_per_sample\tavg_pulses_per_device_sample\t"
      "energy_j_per_sample\tdata_source\n";
  for (const TrainReport& r : reports) {
    const bool ideal = r.config.rule.policy == GapPolicy::Ideal;
    out += r.config.dataset;
    out += '\t';
    out += to_string(r.config.rule.policy);
    out += '\t';
    out += std::to_string(r.config.rule.n_slots);
    out += '\t';
    out += kv::format_double(r.accuracy_mean);
    out += '\t';
    out += kv::format_double(r.accuracy_sigma);
    out += '\t';
    out += ideal ? "n/a" : kv::format_double(r.sigma_dvt);
    out += '\t';
    out += ideal ? "n/a" : kv::format_double(r.latency_ms_per_sample);
    out += '\t';
    out += ideal ? "n/a" : kv::format_double(r.avg_pulses_per_device_sample);
    out += '\t';
    out += ideal ? "n/a" : kv::format_double(r.energy_j_per_sample);
    out += '\t';
    out += r.data_source;
    out += '\n';
  }
  return out;
}

const char* version_string() { return "0.1.0"; }

}  // namespace ctfsim
