#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "ctfsim/errors.hpp"
#include "ctfsim/metrics.hpp"

using namespace ctfsim;

TEST_CASE("energy: exactly linear in the pulse count") {
  const EnergyModel m;
  const double base = energy_per_sample(0.8125, m);
  CHECK(energy_per_sample(1.625, m) == 2.0 * base);   // power-of-two: exact
  CHECK(energy_per_sample(0.40625, m) == 0.5 * base);
  CHECK(energy_per_sample(0.0, m) == 0.0);
  const double three = energy_per_sample(3 * 0.8125, m);
  CHECK(std::abs(three - 3 * base) <= 1e-15 * three);
  // and linear in the per-pulse cost
  EnergyModel twice{m.e_pulse * 2.0};
  CHECK(energy_per_sample(0.8125, twice) == 2.0 * base);
}

TEST_CASE("energy: bad inputs are rejected") {
  CHECK_THROWS_AS(energy_per_sample(1.0, EnergyModel{0.0}), ConfigError);
  CHECK_THROWS_AS(energy_per_sample(-1.0, EnergyModel{}), ConfigError);
}

TEST_CASE("latency: delegates to the pulse program") {
  PulseProgram p;
  p.n_slots = 500;
  p.pw = 5e-6;
  p.t_on_total = 2.5e-3;
  p.t_de_trap = 1e-2;
  p.scheme = SchemeId::P2;
  CHECK(latency_per_sample_ms(p) == total_latency_ms(p));
  CHECK(latency_per_sample_ms(p) == 5002.5);
}

TEST_CASE("table: one row per report, n/a for the ideal baseline") {
  TrainReport a;
  a.config.dataset = "mnist";
  a.config.rule.policy = GapPolicy::True;
  a.config.rule.n_slots = 500;
  a.accuracy_mean = 97.31;
  a.accuracy_sigma = 0.03;
  a.sigma_dvt = 0.025;
  a.latency_ms_per_sample = 2.5;
  a.avg_pulses_per_device_sample = 0.81;
  a.energy_j_per_sample = 5.7e-14;
  a.data_source = "idx:data/mnist";

  TrainReport b;
  b.config.dataset = "mnist";
  b.config.rule.policy = GapPolicy::Ideal;
  b.config.rule.n_slots = 500;
  b.accuracy_mean = 97.51;
  b.data_source = "idx:data/mnist";

  const std::string tsv = comparative_table({a, b});
  // header + two rows
  size_t lines = 0;
  for (char ch : tsv) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(tsv.find("dataset\tpolicy\tn_slots") == 0);
  CHECK(tsv.find("true") != std::string::npos);
  CHECK(tsv.find("97.31") != std::string::npos);
  // the ideal row blanks the hardware columns
  const size_t ideal_row = tsv.find("\tideal\t");
  REQUIRE(ideal_row != std::string::npos);
  const size_t row_end = tsv.find('\n', ideal_row);
  const std::string row = tsv.substr(ideal_row, row_end - ideal_row);
  CHECK(row.find("n/a") != std::string::npos);
}

TEST_CASE("version: present") {
  CHECK(std::string(version_string()).size() > 0);
}
