// Fixture verification: checks that the builtin device fits reproduce the
// measured update-noise column at the half-density operating point, that the
// pulse-count monotonicity and gap-saturation properties hold, and writes
// the fits to data/device_fits.kv. Exits nonzero when any check misses, so
// any constant drift is caught before the fixture ships.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctfsim/device_model.hpp"
#include "ctfsim/errors.hpp"
#include "ctfsim/kv.hpp"
#include "ctfsim/pulse_design.hpp"
#include "ctfsim/rng.hpp"
#include "ctfsim/stochastic.hpp"
#include "ctfsim/trainer.hpp"

using namespace ctfsim;

namespace {

int g_misses = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "ok:  " : "MISS:", what.c_str());
  if (!ok) ++g_misses;
}

std::string fmt(double v) { return kv::format_double(v); }

double total_shift(const BitTrain& train, GapPolicy policy, const DeviceFit& fit) {
  return apply_train(0.0, train, policy, fit);
}

void check_noise_bands(const FitFamily& family, int runs, std::uint64_t seed,
                       double t_on) {
  const SigmaTable targets = SigmaTable::defaults();
  struct Cell {
    GapPolicy policy;
    int n;
    double target;
  };
  std::vector<Cell> cells;
  for (const auto& [n, s] : targets.true_sigma) {
    cells.push_back({GapPolicy::True, n, s});
  }
  for (const auto& [n, s] : targets.sparse_sigma) {
    cells.push_back({GapPolicy::Sparse, n, s});
  }
  std::uint64_t idx = 0;
  for (const Cell& c : cells) {
    const DeviceFit fit = family.at_pw(t_on / c.n);
    const UpdateStats st = update_stats(0.5, c.n, c.policy, fit, runs,
                                        rng_stream(seed, idx++));
    const double rel = std::abs(st.cv - c.target) / c.target;
    check(rel <= 0.25, std::string(to_string(c.policy)) + " N=" +
                           std::to_string(c.n) + ": cv " + fmt(st.cv) +
                           " vs target " + fmt(c.target) + " (rel " +
                           fmt(rel) + ", band 0.25)");
  }
}

void check_totals_decrease(const FitFamily& family, int runs,
                           std::uint64_t seed, double t_on) {
  // more, narrower pulses settle less charge: mean total shift must fall
  const int ns[] = {100, 500, 1000};
  double prev = 1e300;
  for (int n : ns) {
    const DeviceFit fit = family.at_pw(t_on / n);
    const UpdateStats st =
        update_stats(0.5, n, GapPolicy::True, fit, runs, rng_stream(seed, 0x70ULL + n));
    check(st.mean_dvt < prev, "mean total shift falls with N: N=" +
                                  std::to_string(n) + " mean " +
                                  fmt(st.mean_dvt));
    prev = st.mean_dvt;
  }
}

void check_monotonicity_exhaustive(const DeviceFit& fit, double pw) {
  // flipping any OFF slot to ON never lowers the total shift (N = 8, all
  // trains, all positions)
  bool ok = true;
  std::string worst;
  for (int mask = 0; mask < 256 && ok; ++mask) {
    BitTrain t;
    t.pw = pw;
    t.bits.resize(8);
    for (int i = 0; i < 8; ++i) t.bits[i] = (mask >> i) & 1;
    const double base = total_shift(t, GapPolicy::True, fit);
    for (int i = 0; i < 8; ++i) {
      if (t.bits[i]) continue;
      BitTrain u = t;
      u.bits[i] = 1;
      const double more = total_shift(u, GapPolicy::True, fit);
      if (more < base - 1e-12) {
        ok = false;
        worst = "mask " + std::to_string(mask) + " flip " + std::to_string(i) +
                ": " + fmt(base) + " -> " + fmt(more);
        break;
      }
    }
  }
  check(ok, "monotonicity exhaustive N=8 at pw " + fmt(pw) +
                (ok ? "" : " [" + worst + "]"));
}

void check_monotonicity_random(const DeviceFit& fit, double pw,
                               std::uint64_t seed) {
  Rng rng(seed);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    BitTrain t;
    t.pw = pw;
    t.bits.resize(64);
    for (auto& b : t.bits) b = rng.bernoulli(0.4);
    int zero = -1;
    for (int scan = 0; scan < 64; ++scan) {
      const int i = static_cast<int>(rng.next_u64() % 64);
      if (!t.bits[i]) {
        zero = i;
        break;
      }
    }
    if (zero < 0) continue;
    const double base = total_shift(t, GapPolicy::True, fit);
    BitTrain u = t;
    u.bits[zero] = 1;
    ok = total_shift(u, GapPolicy::True, fit) >= base - 1e-12;
  }
  check(ok, "monotonicity randomized N=64 at pw " + fmt(pw));
}

void check_saturation(const DeviceFit& fit) {
  const double tc = fit.t_critical;
  const double at_tc = dvt_step(1.0, tc, fit);
  const double at_2tc = dvt_step(1.0, 2 * tc, fit);
  const double at_100tc = dvt_step(1.0, 100 * tc, fit);
  check(std::abs(at_2tc - at_tc) <= 1e-12 * std::abs(at_tc) &&
            std::abs(at_100tc - at_tc) <= 1e-12 * std::abs(at_tc),
        "gap saturation flat beyond t_critical at pw " + fmt(fit.pw));
  if (fit.c1 > 0.0) {
    check(dvt_step(1.0, tc / 10.0, fit) < at_tc,
          "sub-critical gap settles less at pw " + fmt(fit.pw));
  }
}

void check_guarantees(const DeviceFit& fit) {
  // sufficient conditions behind the monotonicity property: the shortest
  // gap still settles more than one extra decade of gap can add, and one
  // pulse cannot overshoot the exponential envelope
  const double q_eps = q_gap(kEpsilonGap, fit);
  const double decade = fit.c1 * std::log10((fit.pw + kEpsilonGap) / kEpsilonGap);
  check(q_eps >= decade, "short-gap settling dominates a decade of gap at pw " +
                             fmt(fit.pw) + " (" + fmt(q_eps) + " vs " +
                             fmt(decade) + ")");
  const double dvt_max = fit.a_coeff * std::max(1.0, q_gap(fit.t_critical, fit));
  check(std::abs(fit.b_coeff) * dvt_max < 1.0,
        "per-pulse step stays inside the exponential envelope at pw " +
            fmt(fit.pw));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verify the builtin device fixture and write it to disk"};
  std::string out = "data/device_fits.kv";
  int runs = 20000;
  std::uint64_t seed = 42;
  double t_on = 2.5e-3;
  app.add_option("--out", out, "fixture file to write (empty: skip)");
  app.add_option("--runs", runs, "Monte-Carlo runs per noise cell");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--t-on", t_on, "total ON time, seconds");
  CLI11_PARSE(app, argc, argv);

  try {
    const FitFamily& family = FitFamily::builtin_default();
    check_noise_bands(family, runs, seed, t_on);
    check_totals_decrease(family, runs, seed, t_on);
    for (const DeviceFit& fit : family.fits()) {
      check_saturation(fit);
      check_guarantees(fit);
    }
    // monotonicity at the widths the noise column exercises
    check_monotonicity_exhaustive(family.at_pw(t_on / 100), t_on / 100);
    check_monotonicity_exhaustive(family.at_pw(t_on / 1000), t_on / 1000);
    check_monotonicity_random(family.at_pw(t_on / 500), t_on / 500,
                              rng_stream(seed, 0xabcdULL));
    if (!out.empty()) {
      kv::save_file(out, family.to_document());
      std::printf("wrote %s\n", out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "calibration check failed: %s\n", e.what());
    return 1;
  }
  if (g_misses > 0) {
    std::printf("%d check(s) missed\n", g_misses);
    return 1;
  }
  std::printf("all checks passed\n");
  return 0;
}
