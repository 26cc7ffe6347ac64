// Command-line front end. Every subcommand reads its effective options from
// one flat key/value record (defaults, then --config file, then flags), and
// any run that writes files also writes <out>.manifest.kv holding that
// record. `rerun --manifest <file>` replays the record and reproduces the
// output files byte for byte.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctfsim/dataset.hpp"
#include "ctfsim/device_model.hpp"
#include "ctfsim/errors.hpp"
#include "ctfsim/kv.hpp"
#include "ctfsim/metrics.hpp"
#include "ctfsim/pulse_design.hpp"
#include "ctfsim/rng.hpp"
#include "ctfsim/stochastic.hpp"
#include "ctfsim/trainer.hpp"

namespace kv = ctfsim::kv;

namespace {

using ctfsim::ConfigError;
using ctfsim::DataError;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("short write to '" + path + "'");
}

void write_manifest(const kv::Record& rec, const std::string& out_path) {
  kv::Document doc;
  doc.records.push_back(rec);
  kv::save_file(out_path + ".manifest.kv", doc);
}

// One subcommand: CLI flags override the defaults record, a --config file
// sits between them. The effective record is what runs and what the
// manifest stores.
struct SubCmd {
  CLI::App* app = nullptr;
  kv::Record defaults;
  std::string config_path;
  std::vector<std::function<void(kv::Record&)>> overrides;
  std::function<void(const kv::Record&)> run;

  void bind(const std::string& flag, const std::string& key,
            const std::string& help) {
    auto buf = std::make_shared<std::string>(defaults.get(key));
    CLI::Option* opt = app->add_option(flag, *buf, help);
    overrides.push_back([opt, buf, key](kv::Record& r) {
      if (opt->count() > 0) r.set(key, *buf);
    });
  }

  kv::Record effective() const {
    kv::Record r = defaults;
    if (!config_path.empty()) {
      kv::Document doc = kv::load_file(config_path);
      if (doc.records.size() != 1) {
        throw ConfigError("config file '" + config_path +
                          "' must hold exactly one record");
      }
      for (const auto& [k, v] : doc.records[0].fields) {
        if (!r.has(k)) {
          throw ConfigError("unknown config key '" + k + "' for subcommand '" +
                            r.get("command") + "'");
        }
        r.set(k, v);
      }
    }
    for (const auto& f : overrides) f(r);
    return r;
  }
};

ctfsim::FitFamily family_from(const kv::Record& rec) {
  const std::string path = rec.get("fixture");
  return path.empty() ? ctfsim::FitFamily::builtin_default()
                      : ctfsim::FitFamily::load(path);
}

ctfsim::SigmaTable scaled_sigma(double scale) {
  if (!(scale > 0.0)) throw ConfigError("sigma_scale must be positive");
  ctfsim::SigmaTable t = ctfsim::SigmaTable::defaults();
  for (auto& [n, s] : t.true_sigma) s *= scale;
  for (auto& [n, s] : t.sparse_sigma) s *= scale;
  return t;
}

ctfsim::TrainConfig config_from_record(const kv::Record& rec) {
  ctfsim::TrainConfig c;
  c.dataset = rec.get("dataset");
  c.data_dir = rec.get("data_dir");
  c.allow_synthetic = rec.get_int("allow_synthetic") != 0;
  c.hidden_units = static_cast<int>(rec.get_int("hidden_units"));
  c.epochs = static_cast<int>(rec.get_int("epochs"));
  c.learning_rate = rec.get_double("learning_rate");
  c.weight_scale = rec.get_double("weight_scale");
  c.seed = static_cast<std::uint64_t>(rec.get_int("seed"));
  c.n_seeds = static_cast<int>(rec.get_int("n_seeds"));
  c.subsample_train = static_cast<int>(rec.get_int("subsample_train"));
  c.subsample_test = static_cast<int>(rec.get_int("subsample_test"));
  c.backend = rec.get("backend");
  c.t_on_total = rec.get_double("t_on_s");
  c.fixture_path = rec.get("fixture");
  c.rule.n_slots = static_cast<int>(rec.get_int("n_slots"));
  c.rule.policy = ctfsim::policy_from_string(rec.get("policy"));
  c.rule.quantize_on = rec.get_int("quantize") != 0;
  c.rule.noise_on = rec.get_int("noise") != 0;
  c.rule.nonlinearity_on = rec.get_int("nonlinearity") != 0;
  c.rule.sigma = scaled_sigma(rec.get_double("sigma_scale"));
  return c;
}

std::string report_summary(const ctfsim::TrainReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "accuracy %.2f +- %.2f %% over %d seed(s) [%s]",
                rep.accuracy_mean, rep.accuracy_sigma, rep.config.n_seeds,
                rep.data_source.c_str());
  return buf;
}

void run_train(const kv::Record& rec) {
  ctfsim::TrainConfig cfg = config_from_record(rec);
  ctfsim::TrainReport rep = ctfsim::train(cfg);
  rep.energy_j_per_sample = ctfsim::energy_per_sample(
      rep.avg_pulses_per_device_sample,
      ctfsim::EnergyModel{rec.get_double("e_pulse")});
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << rep.to_json();
    return;
  }
  write_file(out, rep.to_json());
  const std::string curve = rec.get("curve_out");
  if (!curve.empty()) write_file(curve, rep.accuracy_tsv());
  write_manifest(rec, out);
  std::cout << report_summary(rep) << "\nwrote " << out << "\n";
}

void run_ablate(const kv::Record& rec) {
  ctfsim::TrainConfig base = config_from_record(rec);
  std::vector<ctfsim::TrainReport> reports = ctfsim::ablate(base);
  if (rec.get_int("include_ideal") != 0) {
    ctfsim::TrainConfig ideal = base;
    ideal.rule = ctfsim::UpdateRule::ideal();
    ideal.rule.n_slots = base.rule.n_slots;
    reports.push_back(ctfsim::train(ideal));
  }
  const double e_pulse = rec.get_double("e_pulse");
  for (auto& r : reports) {
    r.energy_j_per_sample = ctfsim::energy_per_sample(
        r.avg_pulses_per_device_sample, ctfsim::EnergyModel{e_pulse});
  }
  const std::string table = ctfsim::comparative_table(reports);
  // policy alone does not show the noise/nonlinearity toggles; prepend them
  const size_t hdr_end = table.find('\n');
  std::string body = "noise\tnonlinearity\t" + table.substr(0, hdr_end + 1);
  size_t p = hdr_end + 1;
  for (const auto& r : reports) {
    const size_t q = table.find('\n', p);
    body += std::string(r.config.rule.noise_on ? "1" : "0") + "\t" +
            (r.config.rule.nonlinearity_on ? "1" : "0") + "\t" +
            table.substr(p, q - p + 1);
    p = q + 1;
  }
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << body;
    return;
  }
  write_file(out, body);
  write_manifest(rec, out);
  std::cout << "wrote " << out << "\n";
}

void run_stats(const kv::Record& rec) {
  const ctfsim::FitFamily family = family_from(rec);
  const int runs = static_cast<int>(rec.get_int("runs"));
  const std::uint64_t seed = static_cast<std::uint64_t>(rec.get_int("seed"));
  const double vt0 = rec.get_double("vt0");
  const double t_on = rec.get_double("t_on_s");
  const double probs[] = {0.0, 0.2, 0.4, 0.8, 1.0};
  const int counts[] = {25, 100, 500, 1000};
  const ctfsim::GapPolicy policies[] = {ctfsim::GapPolicy::Ideal,
                                        ctfsim::GapPolicy::Sparse,
                                        ctfsim::GapPolicy::True};
  std::string tsv = "p\tn_slots\tpolicy\tmean_dvt\tsigma_dvt\tcv\n";
  std::uint64_t cell = 0;
  for (double p : probs) {
    for (int n : counts) {
      const ctfsim::DeviceFit fit = family.at_pw(t_on / n);
      for (ctfsim::GapPolicy pol : policies) {
        const ctfsim::UpdateStats st = ctfsim::update_stats(
            p, n, pol, fit, runs, ctfsim::rng_stream(seed, cell++),
            ctfsim::VtWindow{}, vt0);
        tsv += kv::format_double(p) + "\t" + std::to_string(n) + "\t" +
               ctfsim::to_string(pol) + "\t" + kv::format_double(st.mean_dvt) +
               "\t" + kv::format_double(st.sigma_dvt) + "\t" +
               kv::format_double(st.cv) + "\n";
      }
    }
  }
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << tsv;
    return;
  }
  write_file(out, tsv);
  write_manifest(rec, out);
  std::cout << "wrote " << out << "\n";
}

void run_errorfloor(const kv::Record& rec) {
  const ctfsim::FitFamily family = family_from(rec);
  const double t_on = rec.get_double("t_on_s");
  const double k = rec.get_double("k_coeff");
  const int n_lo = static_cast<int>(rec.get_int("n_min"));
  const int n_hi = static_cast<int>(rec.get_int("n_max"));
  const auto rows = ctfsim::error_floor_sweep(family, t_on, n_lo, n_hi, k);
  std::string tsv =
      "n_slots\tstoch_err\tvt_err\ttotal_err\tcomp_vt_err\tcomp_total_err\n";
  for (const auto& r : rows) {
    tsv += std::to_string(r.n_slots) + "\t" + kv::format_double(r.stoch_err) +
           "\t" + kv::format_double(r.vt_err) + "\t" +
           kv::format_double(r.total_err) + "\t" +
           kv::format_double(r.comp_vt_err) + "\t" +
           kv::format_double(r.comp_total_err) + "\n";
  }
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << tsv;
    return;
  }
  write_file(out, tsv);
  write_manifest(rec, out);
  std::cout << "wrote " << out << "\n";
}

void run_fit(const kv::Record& rec) {
  const std::string samples_path = rec.get("samples");
  if (samples_path.empty()) throw ConfigError("fit requires --samples <file>");
  const kv::Document doc = kv::load_file(samples_path);
  std::vector<ctfsim::FitSample> samples;
  for (const kv::Record& r : doc.records) {
    ctfsim::FitSample s;
    s.vt = r.get_double("vt");
    s.t_gap = r.get_double("t_gap_s");
    s.pw = r.get_double("pw_s");
    s.dvt_observed = r.get_double("dvt");
    samples.push_back(s);
  }
  const double hint = rec.get_double("t_critical_hint");
  const ctfsim::DeviceFit fit = ctfsim::fit_from_samples(samples, hint);
  kv::Document out_doc;
  out_doc.records.push_back(ctfsim::to_record(fit));
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << kv::serialize(out_doc);
    return;
  }
  kv::save_file(out, out_doc);
  write_manifest(rec, out);
  std::cout << "wrote " << out << "\n";
}

void run_table(const kv::Record& rec) {
  const std::string inputs = rec.get("inputs");
  if (inputs.empty()) throw ConfigError("table requires report files");
  std::vector<ctfsim::TrainReport> reports;
  size_t p = 0;
  while (p <= inputs.size()) {
    const size_t q = inputs.find(';', p);
    const std::string path =
        inputs.substr(p, q == std::string::npos ? q : q - p);
    if (!path.empty()) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw DataError("cannot open report '" + path + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw DataError("report '" + path + "': " + e.what());
      }
      try {
        ctfsim::TrainReport r;
        r.config.dataset = j.at("config").at("dataset").get<std::string>();
        r.config.rule.policy = ctfsim::policy_from_string(
            j.at("config").at("rule").at("policy").get<std::string>());
        r.config.rule.n_slots = j.at("config").at("rule").at("n_slots").get<int>();
        r.accuracy_mean = j.at("accuracy_mean").get<double>();
        r.accuracy_sigma = j.at("accuracy_sigma").get<double>();
        r.sigma_dvt = j.at("sigma_dvt").get<double>();
        r.latency_ms_per_sample = j.at("latency_ms_per_sample").get<double>();
        r.avg_pulses_per_device_sample =
            j.at("avg_pulses_per_device_sample").get<double>();
        r.energy_j_per_sample = j.at("energy_j_per_sample").get<double>();
        r.data_source = j.at("data_source").get<std::string>();
        reports.push_back(std::move(r));
      } catch (const nlohmann::json::exception& e) {
        throw DataError("report '" + path + "' is missing fields: " + e.what());
      }
    }
    if (q == std::string::npos) break;
    p = q + 1;
  }
  const std::string table = ctfsim::comparative_table(reports);
  const std::string out = rec.get("out");
  if (out.empty()) {
    std::cout << table;
    return;
  }
  write_file(out, table);
  write_manifest(rec, out);
  std::cout << "wrote " << out << "\n";
}

void run_defaults() {
  kv::Document doc;
  kv::Record ver;
  ver.set("tool", "ctfsim");
  ver.set("version", ctfsim::version_string());
  doc.records.push_back(ver);

  kv::Record noise;
  noise.set("record", "update_noise_sigma");
  const ctfsim::SigmaTable t = ctfsim::SigmaTable::defaults();
  for (const auto& [n, s] : t.true_sigma) {
    noise.set("true_" + std::to_string(n), kv::format_double(s));
  }
  for (const auto& [n, s] : t.sparse_sigma) {
    noise.set("sparse_" + std::to_string(n), kv::format_double(s));
  }
  doc.records.push_back(noise);

  kv::Record limits;
  limits.set("record", "model_limits");
  limits.set_int("n_max", ctfsim::kNMax);
  limits.set_double("pw_min_s", ctfsim::kPwMin);
  limits.set_double("e_pulse_j", ctfsim::EnergyModel{}.e_pulse);
  doc.records.push_back(limits);

  kv::Record fits;
  fits.set("record", "builtin_fixture_pulse_widths");
  const auto& fam = ctfsim::FitFamily::builtin_default();
  std::string pws;
  for (const auto& f : fam.fits()) {
    if (!pws.empty()) pws += ";";
    pws += kv::format_double(f.pw);
  }
  fits.set("pw_s", pws);
  doc.records.push_back(fits);
  std::cout << kv::serialize(doc);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"training simulator for charge-trap flash crossbars"};
  app.require_subcommand(1);
  std::vector<std::shared_ptr<SubCmd>> subs;

  auto make_sub = [&](const std::string& name, const std::string& help,
                      kv::Record defaults,
                      std::function<void(const kv::Record&)> run) {
    auto sc = std::make_shared<SubCmd>();
    sc->app = app.add_subcommand(name, help);
    sc->defaults = std::move(defaults);
    sc->run = std::move(run);
    sc->app->add_option("--config", sc->config_path,
                        "key = value file overriding the defaults");
    subs.push_back(sc);
    return sc;
  };

  // train ------------------------------------------------------------------
  kv::Record td;
  td.set("command", "train");
  td.set("version", ctfsim::version_string());
  td.set("dataset", "mnist");
  td.set("data_dir", "");
  td.set("allow_synthetic", "1");
  td.set("hidden_units", "1280");
  td.set("epochs", "10");
  td.set("learning_rate", "0.35");
  td.set("weight_scale", "2");
  td.set("seed", "1");
  td.set("n_seeds", "3");
  td.set("subsample_train", "0");
  td.set("subsample_test", "0");
  td.set("backend", "surrogate");
  td.set("t_on_s", "0.0025");
  td.set("fixture", "");
  td.set("n_slots", "1000");
  td.set("policy", "true");
  td.set("quantize", "1");
  td.set("noise", "1");
  td.set("nonlinearity", "1");
  td.set("sigma_scale", "1");
  td.set("e_pulse", kv::format_double(ctfsim::EnergyModel{}.e_pulse));
  td.set("out", "");
  td.set("curve_out", "");

  auto bind_train_like = [](SubCmd& sc, bool with_rule_toggles) {
    sc.bind("--dataset", "dataset", "mnist | fmnist");
    sc.bind("--data-dir", "data_dir", "directory with the IDX files");
    sc.bind("--allow-synthetic", "allow_synthetic",
            "0/1: fall back to the synthetic stand-in");
    sc.bind("--hidden", "hidden_units", "hidden layer width");
    sc.bind("--epochs", "epochs", "training epochs");
    sc.bind("--lr", "learning_rate", "learning rate");
    sc.bind("--scale", "weight_scale", "effective weight scale");
    sc.bind("--seed", "seed", "base seed");
    sc.bind("--seeds", "n_seeds", "independent runs");
    sc.bind("--subsample-train", "subsample_train", "0 = full train split");
    sc.bind("--subsample-test", "subsample_test", "0 = full test split");
    sc.bind("--backend", "backend", "surrogate | stochastic");
    sc.bind("--t-on", "t_on_s", "total ON time per update, seconds");
    sc.bind("--fixture", "fixture", "device fit file (empty: builtin)");
    sc.bind("--n", "n_slots", "pulses per update train");
    if (with_rule_toggles) {
      sc.bind("--policy", "policy", "ideal | sparse | true");
      sc.bind("--quantize", "quantize", "0/1");
      sc.bind("--noise", "noise", "0/1");
      sc.bind("--nonlinearity", "nonlinearity", "0/1");
    }
    sc.bind("--sigma-scale", "sigma_scale", "write-noise multiplier");
    sc.bind("--e-pulse", "e_pulse", "energy per update pulse, joules");
    sc.bind("--out", "out", "output file (stdout when empty)");
  };

  auto train_sc = make_sub("train", "train an MLP with device-style updates",
                           td, run_train);
  bind_train_like(*train_sc, true);
  train_sc->bind("--curve", "curve_out", "per-epoch accuracy TSV");
  {
    // convenience: the no-device-effects baseline in one flag
    CLI::Option* ideal = train_sc->app->add_flag(
        "--ideal", "shorthand for --policy ideal --quantize 0 --noise 0 "
                   "--nonlinearity 0");
    train_sc->overrides.push_back([ideal](kv::Record& r) {
      if (ideal->count() > 0) {
        r.set("policy", "ideal");
        r.set("quantize", "0");
        r.set("noise", "0");
        r.set("nonlinearity", "0");
      }
    });
  }

  // ablate -----------------------------------------------------------------
  kv::Record ad = td;
  ad.set("command", "ablate");
  ad.set("n_slots", "100");
  ad.set("include_ideal", "1");
  {
    // the grid owns these three
    kv::Record trimmed;
    for (const auto& [k, v] : ad.fields) {
      if (k == "policy" || k == "noise" || k == "nonlinearity" ||
          k == "curve_out") {
        continue;
      }
      trimmed.set(k, v);
    }
    trimmed.set("policy", "true");  // placeholder the grid overwrites
    trimmed.set("noise", "1");
    trimmed.set("nonlinearity", "1");
    ad = trimmed;
  }
  auto ablate_sc = make_sub(
      "ablate", "policy x noise x nonlinearity grid at one train length", ad,
      run_ablate);
  bind_train_like(*ablate_sc, false);
  ablate_sc->bind("--include-ideal", "include_ideal",
                  "0/1: append the ideal baseline row");

  // stats ------------------------------------------------------------------
  kv::Record sd;
  sd.set("command", "stats");
  sd.set("version", ctfsim::version_string());
  sd.set("fixture", "");
  sd.set("runs", "10000");
  sd.set("seed", "42");
  sd.set("vt0", "0");
  sd.set("t_on_s", "0.0025");
  sd.set("out", "");
  auto stats_sc = make_sub(
      "stats", "update statistics over the density/length/policy grid", sd,
      run_stats);
  stats_sc->bind("--fixture", "fixture", "device fit file (empty: builtin)");
  stats_sc->bind("--runs", "runs", "Monte-Carlo runs per cell");
  stats_sc->bind("--seed", "seed", "base seed");
  stats_sc->bind("--vt0", "vt0", "starting Vt");
  stats_sc->bind("--t-on", "t_on_s", "total ON time per update, seconds");
  stats_sc->bind("--out", "out", "output TSV (stdout when empty)");

  // errorfloor ---------------------------------------------------------------
  kv::Record ed;
  ed.set("command", "errorfloor");
  ed.set("version", ctfsim::version_string());
  ed.set("fixture", "");
  ed.set("t_on_s", "0.0025");
  ed.set("k_coeff", "1");
  ed.set("n_min", "1");
  ed.set("n_max", "1000");
  ed.set("out", "");
  auto floor_sc = make_sub(
      "errorfloor", "stochastic vs settling error as one ON time is split",
      ed, run_errorfloor);
  floor_sc->bind("--fixture", "fixture", "device fit file (empty: builtin)");
  floor_sc->bind("--t-on", "t_on_s", "total ON time per update, seconds");
  floor_sc->bind("--k", "k_coeff", "stochastic error coefficient");
  floor_sc->bind("--n-min", "n_min", "first train length");
  floor_sc->bind("--n-max", "n_max", "last train length");
  floor_sc->bind("--out", "out", "output TSV (stdout when empty)");

  // fit ----------------------------------------------------------------------
  kv::Record fd;
  fd.set("command", "fit");
  fd.set("version", ctfsim::version_string());
  fd.set("samples", "");
  fd.set("t_critical_hint", "0");
  fd.set("out", "");
  auto fit_sc = make_sub("fit", "recover device constants from measured shifts",
                         fd, run_fit);
  fit_sc->bind("--samples", "samples",
               "kv file of {vt, t_gap_s, pw_s, dvt} records");
  fit_sc->bind("--t-critical", "t_critical_hint",
               "pin t_critical instead of scanning");
  fit_sc->bind("--out", "out", "output fit record (stdout when empty)");

  // table ----------------------------------------------------------------------
  kv::Record tbd;
  tbd.set("command", "table");
  tbd.set("version", ctfsim::version_string());
  tbd.set("inputs", "");
  tbd.set("out", "");
  auto table_sc = make_sub(
      "table", "comparative table from train report files", tbd, run_table);
  {
    auto inputs = std::make_shared<std::vector<std::string>>();
    CLI::Option* opt = table_sc->app->add_option(
        "reports", *inputs, "train report json files");
    table_sc->overrides.push_back([opt, inputs](kv::Record& r) {
      if (opt->count() > 0) {
        std::string joined;
        for (const auto& s : *inputs) {
          if (!joined.empty()) joined += ";";
          joined += s;
        }
        r.set("inputs", joined);
      }
    });
  }
  table_sc->bind("--out", "out", "output TSV (stdout when empty)");

  // defaults / rerun ---------------------------------------------------------
  CLI::App* defaults_app =
      app.add_subcommand("defaults", "print builtin defaults and limits");
  std::string manifest_path;
  CLI::App* rerun_app = app.add_subcommand(
      "rerun", "replay a manifest and reproduce its outputs byte for byte");
  rerun_app->add_option("--manifest", manifest_path, "manifest.kv from a run")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (defaults_app->parsed()) {
    run_defaults();
    return 0;
  }
  if (rerun_app->parsed()) {
    const kv::Document doc = kv::load_file(manifest_path);
    if (doc.records.size() != 1) {
      throw DataError("manifest '" + manifest_path +
                      "' must hold exactly one record");
    }
    const kv::Record& rec = doc.records[0];
    const std::string command = rec.get("command");
    for (const auto& sc : subs) {
      if (sc->defaults.get("command") == command) {
        // replay exactly what ran, including writing the manifest again
        sc->run(rec);
        return 0;
      }
    }
    throw DataError("manifest names unknown command '" + command + "'");
  }
  for (const auto& sc : subs) {
    if (sc->app->parsed()) {
      sc->run(sc->effective());
      return 0;
    }
  }
  return 2;  // unreachable: require_subcommand(1)
}

int main(int argc, char** argv) {
  try {
    return cli_main(argc, argv);
  } catch (const ctfsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ctfsim::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ctfsim::ModelValidityError& e) {
    std::cerr << "model validity error: " << e.what() << "\n";
    return 4;
  } catch (const ctfsim::CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
