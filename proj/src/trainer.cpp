#include "ctfsim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <json.hpp>

#include "ctfsim/errors.hpp"
#include "ctfsim/kv.hpp"
#include "ctfsim/metrics.hpp"

namespace ctfsim {

double SigmaTable::sigma_for(GapPolicy policy, int n_slots) const {
  if (policy == GapPolicy::Ideal) return 0.0;
  const auto& table = policy == GapPolicy::True ? true_sigma : sparse_sigma;
  double anchor_1000 = -1.0;
  for (const auto& [n, sigma] : table) {
    if (n == n_slots) return sigma;
    if (n == 1000) anchor_1000 = sigma;
  }
  if (anchor_1000 >= 0.0) return anchor_1000 * std::sqrt(1000.0 / n_slots);
  throw ConfigError("no write-noise entry for N = " + std::to_string(n_slots) +
                    " under policy '" + to_string(policy) +
                    "' and no N = 1000 anchor to scale from");
}

SigmaTable SigmaTable::defaults() {
  SigmaTable t;
  t.true_sigma = {{100, 0.06}, {500, 0.025}, {1000, 0.02}};
  t.sparse_sigma = {{100, 0.04}, {500, 0.018}, {1000, 0.012}};
  return t;
}

UpdateRule UpdateRule::ideal() {
  UpdateRule r;
  r.policy = GapPolicy::Ideal;
  r.quantize_on = false;
  r.noise_on = false;
  r.nonlinearity_on = false;
  return r;
}

CrossbarPair::CrossbarPair(int rows_, int cols_, double scale_)
    : rows(rows_), cols(cols_), scale(scale_) {
  const size_t n = static_cast<size_t>(rows) * cols;
  pos.assign(n, 0.5);
  neg.assign(n, 0.5);
  eff.assign(n, 0.0);
}

void CrossbarPair::assign(size_t i, double p, double n) {
  pos[i] = p;
  neg[i] = n;
  eff[i] = scale * (p - n);
}

double mean_gap_multiplier(const DeviceFit& fit, double p_ref) {
  const double p = std::clamp(p_ref, 1e-6, 1.0 - 1e-6);
  double acc = 0.0;
  double rem = 1.0;
  double w = p;  // P(gap of m OFF slots) = p (1-p)^m
  for (int m = 0; m < 512; ++m) {
    const double t_gap = kEpsilonGap + m * fit.pw;
    acc += w * q_gap(t_gap, fit);
    rem -= w;
    if (t_gap >= fit.t_critical) break;
    w *= 1.0 - p;
  }
  // every longer gap sees the saturated multiplier
  acc += std::max(rem, 0.0) * q_gap(fit.t_critical, fit);
  return acc;
}

double trajectory_kappa(const UpdateRule& rule, const FitFamily& family,
                        double t_on_total) {
  const DeviceFit fit = family.at_pw(t_on_total / rule.n_slots);
  if (fit.b_coeff >= 0.0) return 0.0;  // convex or flat: treat as linear
  double qbar = 1.0;
  if (rule.policy == GapPolicy::True) {
    qbar = mean_gap_multiplier(fit);
  } else if (rule.policy == GapPolicy::Sparse) {
    qbar = q_gap(fit.t_critical, fit);
  }
  return std::log1p(fit.a_coeff * (-fit.b_coeff) * qbar * rule.n_slots);
}

UpdateContext make_update_context(const UpdateRule& rule, double lr,
                                  const FitFamily& family, double t_on_total) {
  if (rule.n_slots < 1) throw ConfigError("update rule needs n_slots >= 1");
  if (rule.n_slots > kNMax) {
    throw ModelValidityError("pulse count N beyond the valid regime (max " +
                             std::to_string(kNMax) + ")");
  }
  if (!(t_on_total > 0.0)) throw ConfigError("t_on_total must be positive");
  if (t_on_total / rule.n_slots < kPwMin * (1.0 - 1e-12)) {
    throw ModelValidityError("pulse width below the valid regime (Vt vanishes)");
  }
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  UpdateContext ctx;
  ctx.n_slots = rule.n_slots;
  ctx.policy = rule.policy;
  ctx.quantize_on = rule.quantize_on;
  ctx.noise_on = rule.noise_on;
  ctx.nonlinearity_on = rule.nonlinearity_on;
  ctx.lr = lr;
  ctx.sigma = rule.noise_on ? rule.sigma.sigma_for(rule.policy, rule.n_slots) : 0.0;
  ctx.kappa = rule.nonlinearity_on ? trajectory_kappa(rule, family, t_on_total) : 0.0;
  ctx.e_kappa_m1 = std::expm1(ctx.kappa);
  return ctx;
}

Network::Network(int in_dim, int hidden_dim, int out_dim, double scale,
                 std::uint64_t seed)
    : in_(in_dim),
      hidden_(hidden_dim),
      out_(out_dim),
      wh_(hidden_dim, in_dim + 1, scale),
      wo_(out_dim, hidden_dim + 1, scale) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 2) {
    throw ConfigError("network dimensions must be positive (>= 2 outputs)");
  }
  if (!(scale > 0.0)) throw ConfigError("weight scale must be positive");
  Rng rng(rng_stream(seed, 0));
  auto init = [&](CrossbarPair& pair, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < pair.rows; ++r) {
      for (int c = 0; c < pair.cols; ++c) {
        // bias column starts at zero effective weight
        const double w =
            c == pair.cols - 1 ? 0.0 : limit * (2.0 * rng.uniform() - 1.0);
        pair.assign(pair.idx(r, c), 0.5 + w / (2.0 * pair.scale),
                    0.5 - w / (2.0 * pair.scale));
      }
    }
  };
  init(wh_, in_ + 1, hidden_);
  init(wo_, hidden_ + 1, out_);
}

Network::Scratch Network::make_scratch() const {
  Scratch s;
  s.x.assign(in_ + 1, 0.0);
  s.x[in_] = 1.0;
  s.h.assign(hidden_ + 1, 0.0);
  s.h[hidden_] = 1.0;
  s.probs.assign(out_, 0.0);
  s.delta_o.assign(out_, 0.0);
  s.delta_h.assign(hidden_, 0.0);
  return s;
}

void Network::forward(const float* image, Scratch& s) const {
  for (int i = 0; i < in_; ++i) s.x[i] = image[i];
  s.x[in_] = 1.0;
  const int hc = wh_.cols;
  for (int j = 0; j < hidden_; ++j) {
    const double* row = wh_.eff.data() + static_cast<size_t>(j) * hc;
    double acc = 0.0;
    for (int c = 0; c < hc; ++c) acc += row[c] * s.x[c];
    s.h[j] = 1.0 / (1.0 + std::exp(-acc));
  }
  s.h[hidden_] = 1.0;
  const int oc = wo_.cols;
  double mx = -1e300;
  for (int k = 0; k < out_; ++k) {
    const double* row = wo_.eff.data() + static_cast<size_t>(k) * oc;
    double acc = 0.0;
    for (int c = 0; c < oc; ++c) acc += row[c] * s.h[c];
    s.probs[k] = acc;  // logits for now
    mx = std::max(mx, acc);
  }
  double z = 0.0;
  for (int k = 0; k < out_; ++k) {
    s.probs[k] = std::exp(s.probs[k] - mx);
    z += s.probs[k];
  }
  for (int k = 0; k < out_; ++k) s.probs[k] /= z;
}

void Network::backward(int label, Scratch& s) const {
  if (label < 0 || label >= out_) throw DataError("label out of range");
  for (int k = 0; k < out_; ++k) {
    const double target = k == label ? 1.0 : 0.0;
    s.delta_o[k] = std::clamp(target - s.probs[k], -1.0, 1.0);
  }
  const int oc = wo_.cols;
  for (int j = 0; j < hidden_; ++j) {
    double acc = 0.0;
    for (int k = 0; k < out_; ++k) {
      acc += wo_.eff[static_cast<size_t>(k) * oc + j] * s.delta_o[k];
    }
    s.delta_h[j] = std::clamp(s.h[j] * (1.0 - s.h[j]) * acc, -1.0, 1.0);
  }
}

double Network::loss(int label, const Scratch& s) const {
  if (label < 0 || label >= out_) throw DataError("label out of range");
  return -std::log(std::max(s.probs[label], 1e-12));
}

int Network::predict(const Scratch& s) const {
  return static_cast<int>(std::max_element(s.probs.begin(), s.probs.end()) -
                          s.probs.begin());
}

long long Network::device_count() const {
  return static_cast<long long>(wh_.rows) * wh_.cols +
         static_cast<long long>(wo_.rows) * wo_.cols;
}

namespace {

struct ResolvedData {
  ImageSet train;
  ImageSet test;
  std::string source;
};

ResolvedData resolve_dataset(const TrainConfig& cfg) {
  if (cfg.dataset != "mnist" && cfg.dataset != "fmnist") {
    throw ConfigError("unknown dataset '" + cfg.dataset +
                      "' (expected mnist|fmnist)");
  }
  std::vector<std::string> candidates;
  if (!cfg.data_dir.empty()) {
    candidates.push_back(cfg.data_dir);
  } else {
    if (const char* env = std::getenv("CTFSIM_DATA_DIR")) {
      candidates.push_back(std::string(env) + "/" + cfg.dataset);
    }
    candidates.push_back("data/" + cfg.dataset);
  }
  for (const auto& dir : candidates) {
    DatasetPaths p = find_idx_files(dir);
    if (!p.found) continue;
    ResolvedData d;
    d.train = load_idx(p.train_images, p.train_labels);
    d.test = load_idx(p.test_images, p.test_labels);
    if (cfg.subsample_train > 0) {
      d.train = subsample(d.train, cfg.subsample_train,
                          rng_stream(cfg.seed, 0xda7aULL, 0));
    }
    if (cfg.subsample_test > 0) {
      d.test = subsample(d.test, cfg.subsample_test,
                         rng_stream(cfg.seed, 0xda7aULL, 1));
    }
    d.source = "idx:" + dir;
    return d;
  }
  if (!cfg.data_dir.empty()) {
    throw DataError("no IDX files under '" + cfg.data_dir + "'");
  }
  if (!cfg.allow_synthetic) {
    throw DataError("dataset '" + cfg.dataset +
                    "' not found and the synthetic stand-in is disabled");
  }
  const SyntheticSpec spec =
      cfg.dataset == "fmnist" ? synthetic_fmnist_spec() : synthetic_mnist_spec();
  ResolvedData d;
  d.train = synthetic_images(
      cfg.subsample_train > 0 ? cfg.subsample_train : 60000, spec, 0);
  d.test = synthetic_images(
      cfg.subsample_test > 0 ? cfg.subsample_test : 10000, spec, 1);
  d.source = "synthetic:" + cfg.dataset;
  return d;
}

struct RunResult {
  std::vector<double> epoch_acc;
  double pulses = 0.0;
};

double evaluate(const Network& net, const ImageSet& test, Network::Scratch& s) {
  int correct = 0;
  for (int i = 0; i < test.count(); ++i) {
    net.forward(test.image(i), s);
    if (net.predict(s) == test.labels[i]) ++correct;
  }
  return 100.0 * correct / std::max(1, test.count());
}

void shuffle_order(std::vector<int>& order, Rng& rng) {
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
}

RunResult run_surrogate(const TrainConfig& cfg, const ImageSet& train_set,
                        const ImageSet& test_set, const UpdateContext& ctx,
                        std::uint64_t run_seed) {
  const int in_dim = train_set.rows * train_set.cols;
  Network net(in_dim, cfg.hidden_units, 10, cfg.weight_scale, run_seed);
  Network::Scratch s = net.make_scratch();
  CrossbarPair& wo = net.output_pair();
  CrossbarPair& wh = net.hidden_pair();
  const int n = train_set.count();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> nz;
  nz.reserve(in_dim + 1);
  RunResult res;
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng shuffle_rng(rng_stream(run_seed, 1, static_cast<std::uint64_t>(e)));
    shuffle_order(order, shuffle_rng);
    long long pulses = 0;
    for (int pos = 0; pos < n; ++pos) {
      const int idx = order[pos];
      Rng urng(rng_stream(run_seed, 2,
                          static_cast<std::uint64_t>(e) * n + pos));
      net.forward(train_set.image(idx), s);
      net.backward(train_set.labels[idx], s);
      for (int r = 0; r < wo.rows; ++r) {
        const double d = s.delta_o[r];
        if (d == 0.0) continue;
        const size_t base = static_cast<size_t>(r) * wo.cols;
        for (int c = 0; c < wo.cols; ++c) {
          pulses += apply_surrogate_update(wo, base + c, s.h[c] * d, ctx, urng);
        }
      }
      // activations are fixed across hidden rows; enumerate nonzero inputs
      // once (updates at zero activation are no-ops that consume no RNG)
      nz.clear();
      for (int c = 0; c < wh.cols; ++c) {
        if (s.x[c] != 0.0) nz.push_back(c);
      }
      for (int r = 0; r < wh.rows; ++r) {
        const double d = s.delta_h[r];
        if (d == 0.0) continue;
        const size_t base = static_cast<size_t>(r) * wh.cols;
        for (int c : nz) {
          pulses += apply_surrogate_update(wh, base + c, s.x[c] * d, ctx, urng);
        }
      }
    }
    res.pulses += static_cast<double>(pulses);
    res.epoch_acc.push_back(evaluate(net, test_set, s));
  }
  return res;
}

// Bit-exact crossbar semantics: one train per row activation, one per column
// error, pulses fire where they overlap and walk the device model with the
// policy's gaps. Costs O(N) per crosspoint per sample; meant for small nets.
RunResult run_stochastic(const TrainConfig& cfg, const ImageSet& train_set,
                         const ImageSet& test_set, const UpdateContext& ctx,
                         const FitFamily& family, std::uint64_t run_seed) {
  const int in_dim = train_set.rows * train_set.cols;
  Network net(in_dim, cfg.hidden_units, 10, cfg.weight_scale, run_seed);
  Network::Scratch s = net.make_scratch();
  const DeviceFit fit = family.at_pw(cfg.t_on_total / ctx.n_slots);
  const VtWindow window;
  const double amp = std::sqrt(ctx.lr);
  const double pw = cfg.t_on_total / ctx.n_slots;
  const int n = train_set.count();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RunResult res;
  std::vector<BitTrain> act_trains;
  std::vector<BitTrain> err_trains;
  auto update_layer = [&](CrossbarPair& pair, const std::vector<double>& act,
                          const std::vector<double>& err,
                          std::uint64_t stream_base) {
    long long pulses = 0;
    act_trains.clear();
    err_trains.clear();
    for (int c = 0; c < pair.cols; ++c) {
      const double p = std::min(1.0, amp * act[c]);
      act_trains.push_back(
          encode(p, ctx.n_slots, rng_stream(stream_base, 0, c), pw));
    }
    for (int r = 0; r < pair.rows; ++r) {
      const double p = std::min(1.0, amp * std::abs(err[r]));
      err_trains.push_back(
          encode(p, ctx.n_slots, rng_stream(stream_base, 1, r), pw));
    }
    for (int r = 0; r < pair.rows; ++r) {
      if (err[r] == 0.0) continue;
      for (int c = 0; c < pair.cols; ++c) {
        const BitTrain overlap = and_overlap(err_trains[r], act_trains[c]);
        const int ones = ones_count(overlap);
        if (ones == 0) continue;
        const size_t i = pair.idx(r, c);
        double& w = err[r] > 0.0 ? pair.pos[i] : pair.neg[i];
        const double vt = window.lo + w * window.width();
        const double vt2 = apply_train(vt, overlap, ctx.policy, fit, window);
        w = (vt2 - window.lo) / window.width();
        pair.eff[i] = pair.scale * (pair.pos[i] - pair.neg[i]);
        pulses += ones;
      }
    }
    return pulses;
  };
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng shuffle_rng(rng_stream(run_seed, 1, static_cast<std::uint64_t>(e)));
    shuffle_order(order, shuffle_rng);
    long long pulses = 0;
    for (int pos = 0; pos < n; ++pos) {
      const int idx = order[pos];
      const std::uint64_t step = static_cast<std::uint64_t>(e) * n + pos;
      net.forward(train_set.image(idx), s);
      net.backward(train_set.labels[idx], s);
      pulses += update_layer(net.output_pair(), s.h, s.delta_o,
                             rng_stream(run_seed, 3, step));
      pulses += update_layer(net.hidden_pair(), s.x, s.delta_h,
                             rng_stream(run_seed, 4, step));
    }
    res.pulses += static_cast<double>(pulses);
    res.epoch_acc.push_back(evaluate(net, test_set, s));
  }
  return res;
}

}  // namespace

TrainReport train(const TrainConfig& cfg) {
  if (cfg.hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (cfg.backend != "surrogate" && cfg.backend != "stochastic") {
    throw ConfigError("unknown backend '" + cfg.backend +
                      "' (expected surrogate|stochastic)");
  }
  const FitFamily family = cfg.fixture_path.empty()
                               ? FitFamily::builtin_default()
                               : FitFamily::load(cfg.fixture_path);
  const UpdateContext ctx =
      make_update_context(cfg.rule, cfg.learning_rate, family, cfg.t_on_total);
  ResolvedData data = resolve_dataset(cfg);

  TrainReport rep;
  rep.config = cfg;
  rep.data_source = data.source;
  double pulses_total = 0.0;
  for (int sdx = 0; sdx < cfg.n_seeds; ++sdx) {
    const std::uint64_t run_seed = rng_stream(cfg.seed, 0x5eedULL, sdx);
    RunResult r = cfg.backend == "surrogate"
                      ? run_surrogate(cfg, data.train, data.test, ctx, run_seed)
                      : run_stochastic(cfg, data.train, data.test, ctx, family,
                                       run_seed);
    rep.per_epoch_accuracy.push_back(r.epoch_acc);
    rep.final_accuracy.push_back(r.epoch_acc.back());
    pulses_total += r.pulses;
  }
  double mean = 0.0;
  for (double a : rep.final_accuracy) mean += a;
  mean /= cfg.n_seeds;
  double var = 0.0;
  for (double a : rep.final_accuracy) var += (a - mean) * (a - mean);
  rep.accuracy_mean = mean;
  rep.accuracy_sigma = cfg.n_seeds > 1 ? std::sqrt(var / (cfg.n_seeds - 1)) : 0.0;
  rep.total_pulses = pulses_total / cfg.n_seeds;  // per run

  const int in_dim = data.train.rows * data.train.cols;
  const long long devices =
      static_cast<long long>(cfg.hidden_units) * (in_dim + 1) +
      10LL * (cfg.hidden_units + 1);
  const double samples_per_run =
      static_cast<double>(cfg.epochs) * data.train.count();
  rep.avg_pulses_per_device_sample =
      rep.total_pulses / (samples_per_run * static_cast<double>(devices));
  rep.sigma_dvt = ctx.sigma;

  const DeviceFit fit = family.at_pw(cfg.t_on_total / cfg.rule.n_slots);
  const SchemeId scheme =
      cfg.rule.policy == GapPolicy::Sparse ? SchemeId::P2 : SchemeId::P1;
  const PulseProgram prog = build_program(scheme, cfg.rule.n_slots,
                                          cfg.t_on_total, fit, NonVolatileSpec{});
  rep.latency_ms_per_sample = total_latency_ms(prog);
  rep.energy_j_per_sample = energy_per_sample(rep.avg_pulses_per_device_sample,
                                              EnergyModel{});
  return rep;
}

std::vector<TrainReport> ablate(const TrainConfig& base) {
  std::vector<TrainReport> out;
  for (GapPolicy policy : {GapPolicy::True, GapPolicy::Sparse}) {
    for (bool noise : {false, true}) {
      for (bool nonlinearity : {false, true}) {
        TrainConfig c = base;
        c.rule.policy = policy;
        c.rule.noise_on = noise;
        c.rule.nonlinearity_on = nonlinearity;
        out.push_back(train(c));
      }
    }
  }
  return out;
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["data_source"] = data_source;
  j["config"] = {
      {"dataset", config.dataset},
      {"data_dir", config.data_dir},
      {"allow_synthetic", config.allow_synthetic},
      {"hidden_units", config.hidden_units},
      {"epochs", config.epochs},
      {"learning_rate", config.learning_rate},
      {"weight_scale", config.weight_scale},
      {"seed", config.seed},
      {"n_seeds", config.n_seeds},
      {"subsample_train", config.subsample_train},
      {"subsample_test", config.subsample_test},
      {"backend", config.backend},
      {"t_on_total_s", config.t_on_total},
      {"fixture_path", config.fixture_path},
      {"rule",
       {{"n_slots", config.rule.n_slots},
        {"policy", to_string(config.rule.policy)},
        {"quantize_on", config.rule.quantize_on},
        {"noise_on", config.rule.noise_on},
        {"nonlinearity_on", config.rule.nonlinearity_on}}},
  };
  j["per_epoch_accuracy"] = per_epoch_accuracy;
  j["final_accuracy"] = final_accuracy;
  j["accuracy_mean"] = accuracy_mean;
  j["accuracy_sigma"] = accuracy_sigma;
  j["total_pulses"] = total_pulses;
  j["avg_pulses_per_device_sample"] = avg_pulses_per_device_sample;
  j["sigma_dvt"] = sigma_dvt;
  j["latency_ms_per_sample"] = latency_ms_per_sample;
  j["energy_j_per_sample"] = energy_j_per_sample;
  return j.dump(2) + "\n";
}

std::string TrainReport::accuracy_tsv() const {
  std::string out = "seed\tepoch\taccuracy_pct\n";
  for (size_t sdx = 0; sdx < per_epoch_accuracy.size(); ++sdx) {
    for (size_t e = 0; e < per_epoch_accuracy[sdx].size(); ++e) {
      out += std::to_string(sdx) + "\t" + std::to_string(e + 1) + "\t" +
             kv::format_double(per_epoch_accuracy[sdx][e]) + "\n";
    }
  }
  return out;
}

}  // namespace ctfsim
