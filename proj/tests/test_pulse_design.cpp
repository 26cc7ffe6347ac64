#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "ctfsim/device_model.hpp"
#include "ctfsim/errors.hpp"
#include "ctfsim/kv.hpp"
#include "ctfsim/pulse_design.hpp"

using namespace ctfsim;

namespace {
const FitFamily& fam() { return FitFamily::builtin_default(); }
}  // namespace

TEST_CASE("pulse: names round-trip") {
  CHECK(scheme_from_string("p3") == SchemeId::P3);
  CHECK(std::string(to_string(SchemeId::P2)) == "p2");
  CHECK(policy_from_string("sparse") == GapPolicy::Sparse);
  CHECK(std::string(to_string(GapPolicy::True)) == "true");
  CHECK_THROWS_AS(scheme_from_string("p9"), ConfigError);
  CHECK_THROWS_AS(policy_from_string("dense"), ConfigError);
}

TEST_CASE("pulse: trap time splits the pulse against the retention budget") {
  // 25e-6 - 2e-3 / 100, evaluated independently and frozen
  const double expected = 4.9999999999999996e-06;
  const double got = trap_time(25e-6, NonVolatileSpec{2e-3, 100});
  CHECK(std::abs(got - expected) <= 1e-15 * expected);
  // infeasible when the non-volatile share exceeds the pulse
  CHECK_THROWS_AS(trap_time(25e-6, NonVolatileSpec{5e-3, 100}),
                  ModelValidityError);
  CHECK_THROWS_AS(trap_time(25e-6, NonVolatileSpec{2e-3, 0}), ConfigError);
}

TEST_CASE("pulse: detrap time is the largest critical gap") {
  DeviceFit a, b, c;
  a.t_critical = 1e-3;
  b.t_critical = 4e-3;
  c.t_critical = 10e-3;
  a.pw = b.pw = c.pw = 1e-5;
  a.a_coeff = b.a_coeff = c.a_coeff = 0.1;
  CHECK(detrap_time(std::vector<DeviceFit>{a, b, c}) == 10e-3);
  CHECK(detrap_time(b) == 4e-3);
  CHECK_THROWS_AS(detrap_time(std::vector<DeviceFit>{}), ConfigError);
}

TEST_CASE("pulse: programs carry the scheme timing") {
  const DeviceFit fit = fam().at_pw(2.5e-5);
  const NonVolatileSpec nv{2e-3, 100};

  const PulseProgram p1 = build_program(SchemeId::P1, 100, 2.5e-3, fit, nv);
  CHECK(p1.pw == 2.5e-5);
  CHECK(p1.t_trap == 0.0);
  CHECK(p1.t_de_trap == 0.0);
  CHECK(p1.gap_policy == GapPolicy::True);
  CHECK_FALSE(p1.has_negative_pulse);

  const PulseProgram p2 = build_program(SchemeId::P2, 100, 2.5e-3, fit, nv);
  CHECK(p2.t_trap == 0.0);
  CHECK(p2.t_de_trap == fit.t_critical);
  CHECK(p2.gap_policy == GapPolicy::Sparse);

  const PulseProgram p3 = build_program(SchemeId::P3, 100, 2.5e-3, fit, nv);
  CHECK(std::abs(p3.t_trap - 5e-6) <= 1e-20);
  CHECK(p3.t_de_trap == fit.t_critical);
  CHECK(p3.gap_policy == GapPolicy::Sparse);

  const PulseProgram p4 = build_program(SchemeId::P4, 100, 2.5e-3, fit, nv);
  CHECK(p4.has_negative_pulse);
  CHECK(p4.t_de_trap == p4.pw);  // default negative pulse mirrors the positive
  CHECK(p4.gap_policy == GapPolicy::Sparse);
  const PulseProgram p4w =
      build_program(SchemeId::P4, 100, 2.5e-3, fit, nv, 5e-5);
  CHECK(p4w.t_de_trap == 5e-5);
}

TEST_CASE("pulse: a trap window of zero degenerates to the plain scheme") {
  const DeviceFit fit = fam().at_pw(2.5e-5);
  // t_nv / n_req == pw: nothing left for trap filling
  CHECK_THROWS_AS(build_program(SchemeId::P3, 100, 2.5e-3, fit,
                                NonVolatileSpec{2.5e-3, 100}),
                  ModelValidityError);
}

TEST_CASE("pulse: regime limits are enforced") {
  const DeviceFit fit = fam().at_pw(2.5e-5);
  const NonVolatileSpec nv;
  CHECK_THROWS_AS(build_program(SchemeId::P1, 1001, 2.5e-3, fit, nv),
                  ModelValidityError);
  // pw below 2.5 us
  CHECK_THROWS_AS(build_program(SchemeId::P1, 1000, 2.4e-3, fit, nv),
                  ModelValidityError);
  CHECK_THROWS_AS(build_program(SchemeId::P1, 0, 2.5e-3, fit, nv), ConfigError);
  CHECK_THROWS_AS(build_program(SchemeId::P1, 100, 0.0, fit, nv), ConfigError);
}

TEST_CASE("pulse: latency in ms is exact at the published operating points") {
  const NonVolatileSpec nv;
  for (int n : {100, 500, 1000}) {
    const DeviceFit fit = fam().at_pw(2.5e-3 / n);
    const PulseProgram p1 = build_program(SchemeId::P1, n, 2.5e-3, fit, nv);
    CHECK(total_latency_ms(p1) == 2.5);  // bit-for-bit
  }
  const double expected[] = {1002.5, 5002.5, 10002.5};
  const int ns[] = {100, 500, 1000};
  for (int i = 0; i < 3; ++i) {
    const DeviceFit fit = fam().at_pw(2.5e-3 / ns[i]);
    const PulseProgram p2 = build_program(SchemeId::P2, ns[i], 2.5e-3, fit, nv);
    CHECK(total_latency_ms(p2) == expected[i]);  // bit-for-bit
  }
}

TEST_CASE("pulse: latency in seconds sums the components") {
  PulseProgram p;
  p.n_slots = 10;
  p.pw = 1e-5;
  p.t_on_total = 1e-4;
  p.t_trap = 2e-6;
  p.t_de_trap = 3e-3;
  const double want = 1e-4 + 10 * (2e-6 + 3e-3);
  CHECK(std::abs(total_latency(p) - want) <= 1e-18);
}

TEST_CASE("pulse: program record schema") {
  const DeviceFit fit = fam().at_pw(2.5e-5);
  const kv::Record rec =
      to_record(build_program(SchemeId::P3, 100, 2.5e-3, fit, NonVolatileSpec{}));
  CHECK(rec.get("scheme") == "p3");
  CHECK(rec.get_int("n_slots") == 100);
  CHECK(rec.has("pw_s"));
  CHECK(rec.has("t_on_s"));
  CHECK(rec.has("t_trap_s"));
  CHECK(rec.has("t_de_trap_s"));
  CHECK(rec.get("gap_policy") == "sparse");
  CHECK(rec.get_int("has_negative_pulse") == 0);
}
