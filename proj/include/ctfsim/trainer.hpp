#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctfsim/dataset.hpp"
#include "ctfsim/device_model.hpp"
#include "ctfsim/pulse_design.hpp"
#include "ctfsim/rng.hpp"
#include "ctfsim/stochastic.hpp"

namespace ctfsim {

// Measured write-noise sigma (normalized device units at the p = 0.5
// characterization point) per gap policy and train length. Lengths without
// an entry fall back to the 1/sqrt(N) law anchored at the N = 1000 entry;
// a table with neither is a configuration error. Ideal policy is noiseless.
struct SigmaTable {
  std::vector<std::pair<int, double>> true_sigma;
  std::vector<std::pair<int, double>> sparse_sigma;

  double sigma_for(GapPolicy policy, int n_slots) const;
  static SigmaTable defaults();
};

struct UpdateRule {
  int n_slots = 1000;
  GapPolicy policy = GapPolicy::True;
  bool quantize_on = true;  // round |x*delta| to k/N (stochastic rounding)
  bool noise_on = true;     // Gaussian write noise from the sigma table
  bool nonlinearity_on = true;  // move along the mean-trajectory curve
  SigmaTable sigma = SigmaTable::defaults();

  // The no-device-effects baseline: plain SGD.
  static UpdateRule ideal();
};

struct TrainConfig {
  std::string dataset = "mnist";  // mnist | fmnist
  std::string data_dir;           // empty: $CTFSIM_DATA_DIR/<dataset>, then data/<dataset>
  bool allow_synthetic = true;    // stand-in generator when IDX files are absent
  int hidden_units = 1280;
  int epochs = 10;
  double learning_rate = 0.35;
  double weight_scale = 2.0;  // effective weight = scale * (W_pos - W_neg)
  std::uint64_t seed = 1;
  int n_seeds = 3;
  int subsample_train = 0;  // 0 = full split
  int subsample_test = 0;
  std::string backend = "surrogate";  // surrogate | stochastic
  double t_on_total = 2.5e-3;
  std::string fixture_path;  // empty: builtin calibrated fits
  UpdateRule rule;
};

struct TrainReport {
  TrainConfig config;
  std::string data_source;  // "idx:<dir>" or "synthetic:<name>"
  std::vector<std::vector<double>> per_epoch_accuracy;  // [seed][epoch], percent
  std::vector<double> final_accuracy;                   // per seed, percent
  double accuracy_mean = 0.0;
  double accuracy_sigma = 0.0;
  double total_pulses = 0.0;
  double avg_pulses_per_device_sample = 0.0;
  double sigma_dvt = 0.0;         // write noise the run injected (0 for ideal)
  double latency_ms_per_sample = 0.0;
  double energy_j_per_sample = 0.0;

  std::string to_json() const;
  std::string accuracy_tsv() const;
};

// Positive/negative crossbar matrices holding normalized device states in
// [0,1]; the signed network weight is scale * (pos - neg). eff caches that
// product so the forward pass reads one matrix.
struct CrossbarPair {
  int rows = 0, cols = 0;  // rows: fan-out, cols: fan-in including bias
  double scale = 2.0;
  std::vector<double> pos, neg, eff;

  CrossbarPair() = default;
  CrossbarPair(int rows_, int cols_, double scale_);
  size_t idx(int r, int c) const { return static_cast<size_t>(r) * cols + c; }
  void assign(size_t i, double p, double n);
};

// Per-run constants of the update rule, precomputed once.
struct UpdateContext {
  int n_slots = 1000;
  GapPolicy policy = GapPolicy::True;
  bool quantize_on = true;
  bool noise_on = true;
  bool nonlinearity_on = true;
  double lr = 0.35;
  double sigma = 0.0;      // per-event write noise at the p = 0.5 point
  double kappa = 0.0;      // trajectory curvature; 0 means linear
  double e_kappa_m1 = 0.0; // exp(kappa) - 1
};

UpdateContext make_update_context(const UpdateRule& rule, double lr,
                                  const FitFamily& family, double t_on_total);

// Mean gap multiplier a stochastic train sees under the True policy: the
// geometric law of gaps between ON pulses at reference density p_ref.
double mean_gap_multiplier(const DeviceFit& fit, double p_ref = 0.5);

// Curvature of the [0,1]-normalized mean-trajectory for a full train:
// kappa = ln(1 + A |B| qbar N). Zero (linear) when B >= 0.
double trajectory_kappa(const UpdateRule& rule, const FitFamily& family,
                        double t_on_total);

// Position after consuming update fraction u of the full-train trajectory
// starting at w; exact flow of the state equation, so consecutive casts
// compose: cast(cast(w,a),b) = cast(w,a+b) as long as nothing clamps.
inline double trajectory_cast(double w, double u, double kappa) {
  if (!(kappa > 1e-12)) return w + u;
  return std::log(std::exp(kappa * w) + u * std::expm1(kappa)) / kappa;
}

// One device write: quantize |raw| to k/N (stochastic rounding), perturb
// with write noise, route by sign to pos/neg, advance along the trajectory,
// clamp to [0,1]. Returns the program pulses issued (k). raw == 0 returns
// without consuming randomness, so zero activations can be skipped outright.
inline int apply_surrogate_update(CrossbarPair& pair, size_t i, double raw,
                                  const UpdateContext& ctx, Rng& rng) {
  if (raw == 0.0) return 0;
  double mag = std::abs(raw);
  if (mag > 1.0) mag = 1.0;
  int k;
  double uq;
  if (ctx.quantize_on) {
    double scaled = mag * ctx.n_slots;
    double fl = std::floor(scaled);
    k = static_cast<int>(fl);
    double frac = scaled - fl;
    if (frac > 0.0 && rng.uniform() < frac) ++k;
    if (k == 0) return 0;
    uq = static_cast<double>(k) / ctx.n_slots;
  } else {
    uq = mag;
    k = static_cast<int>(std::llround(uq * ctx.n_slots));  // accounting only
  }
  if (ctx.noise_on && ctx.sigma > 0.0) {
    // sigma is measured at half-density trains; event noise scales with the
    // square root of the pulse count actually issued.
    uq += ctx.sigma * std::sqrt(uq / 0.5) * rng.gaussian();
    if (uq < 0.0) uq = 0.0;  // an issued train cannot reverse the device
  }
  double u = ctx.lr * uq;
  double& w = raw > 0.0 ? pair.pos[i] : pair.neg[i];
  double nw;
  if (ctx.nonlinearity_on && ctx.kappa > 1e-12) {
    nw = std::log(std::exp(ctx.kappa * w) + u * ctx.e_kappa_m1) / ctx.kappa;
  } else {
    nw = w + u;
  }
  w = nw < 0.0 ? 0.0 : (nw > 1.0 ? 1.0 : nw);
  pair.eff[i] = pair.scale * (pair.pos[i] - pair.neg[i]);
  return k;
}

// One-hidden-layer MLP (sigmoid hidden, softmax output, bias via an
// augmented constant input) whose weights live on crossbar pairs.
class Network {
 public:
  Network(int in_dim, int hidden_dim, int out_dim, double scale, std::uint64_t seed);

  struct Scratch {
    std::vector<double> x;        // in_dim + 1, trailing 1
    std::vector<double> h;        // hidden_dim + 1, trailing 1
    std::vector<double> probs;    // out_dim
    std::vector<double> delta_o;  // out_dim, target - prob
    std::vector<double> delta_h;  // hidden_dim, clipped to [-1, 1]
  };

  Scratch make_scratch() const;
  void forward(const float* image, Scratch& s) const;
  // Error signals whose outer products with (x, h) are the exact negative
  // gradient of the cross-entropy loss (before clipping).
  void backward(int label, Scratch& s) const;
  double loss(int label, const Scratch& s) const;
  int predict(const Scratch& s) const;

  CrossbarPair& hidden_pair() { return wh_; }
  CrossbarPair& output_pair() { return wo_; }
  const CrossbarPair& hidden_pair() const { return wh_; }
  const CrossbarPair& output_pair() const { return wo_; }
  int in_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }
  int out_dim() const { return out_; }
  long long device_count() const;  // logical weights (pos/neg pairs)

 private:
  int in_, hidden_, out_;
  CrossbarPair wh_, wo_;
};

TrainReport train(const TrainConfig& config);

// Fig.-style ablation grid: policy x noise x nonlinearity at the base N.
std::vector<TrainReport> ablate(const TrainConfig& base);

}  // namespace ctfsim
