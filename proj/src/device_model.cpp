#include "ctfsim/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "ctfsim/errors.hpp"

namespace ctfsim {

double p_ideal(double vt, const DeviceFit& fit) {
  return fit.a_coeff * std::exp(fit.b_coeff * vt);
}

double q_gap(double t_gap, const DeviceFit& fit) {
  if (t_gap <= 0.0) throw ConfigError("q_gap: t_gap must be positive");
  const double t = std::min(t_gap, fit.t_critical);
  const double q = fit.c1 * std::log10(t) + fit.c2;
  return q > 0.0 ? q : 0.0;
}

double dvt_step(double vt, double t_gap, const DeviceFit& fit) {
  return p_ideal(vt, fit) * q_gap(t_gap, fit);
}

DeviceFit normalized(const DeviceFit& fit) {
  const double qsat = fit.c1 * std::log10(fit.t_critical) + fit.c2;
  if (!(qsat > 0.0))
    throw ModelValidityError("fit has non-positive saturated Q; cannot normalize");
  DeviceFit out = fit;
  out.a_coeff *= qsat;
  out.c1 /= qsat;
  out.c2 /= qsat;
  return out;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope*x + intercept; nullopt when x carries no
// variance (the rank-deficient case the calibration errors name).
std::optional<LineFit> regress(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

struct StagedFit {
  DeviceFit fit;
  double sse = 0.0;
};

// Two-stage fit at a fixed candidate t_critical. Stage 1 regresses
// ln(dvt) on vt over the saturated samples (gauge: that intercept is ln A).
// Stage 2 regresses the residual ratio dvt / (A exp(B vt)) on log10(t_gap)
// over the sub-critical samples, then rescales so Q(t_critical) = 1 exactly.
StagedFit fit_at_tc(const std::vector<FitSample>& samples, double pw, double tc) {
  std::vector<double> svt, sln, ulg, urt;
  std::vector<const FitSample*> sub;
  for (const auto& s : samples) {
    if (s.t_gap >= tc * (1.0 - 1e-12)) {
      svt.push_back(s.vt);
      sln.push_back(std::log(s.dvt_observed));
    } else {
      sub.push_back(&s);
    }
  }
  if (svt.size() < 2)
    throw CalibrationError(
        "saturated regime under-determined: need >= 2 samples with t_gap >= t_critical "
        "at distinct vt");
  auto pb = regress(svt, sln);
  if (!pb)
    throw CalibrationError(
        "saturated regime under-determined: samples share a single vt, cannot separate A "
        "from B");
  const double b = pb->slope;
  double a = std::exp(pb->intercept);

  if (sub.size() < 2)
    throw CalibrationError(
        "sub-critical regime under-determined: need >= 2 samples with t_gap < t_critical "
        "at distinct gaps");
  for (const FitSample* s : sub) {
    ulg.push_back(std::log10(s->t_gap));
    urt.push_back(s->dvt_observed / (a * std::exp(b * s->vt)));
  }
  auto qf = regress(ulg, urt);
  if (!qf)
    throw CalibrationError(
        "sub-critical regime under-determined: samples share a single t_gap, cannot fit "
        "the gap law");
  double c1 = qf->slope, c2 = qf->intercept;
  const double scale = c1 * std::log10(tc) + c2;
  if (!(scale > 0.0))
    throw CalibrationError("gap law fit gives non-positive Q at t_critical");
  c1 /= scale;
  c2 /= scale;
  a *= scale;

  StagedFit out;
  out.fit = DeviceFit{pw, a, b, c1, c2, tc};
  for (const auto& s : samples) {
    const double q = q_gap(s.t_gap, out.fit);
    if (q <= 0.0) {
      out.sse = std::numeric_limits<double>::infinity();
      return out;
    }
    const double r = std::log(s.dvt_observed) - std::log(a * std::exp(b * s.vt) * q);
    out.sse += r * r;
  }
  return out;
}

}  // namespace

DeviceFit fit_from_samples(const std::vector<FitSample>& samples, double t_critical_hint) {
  if (samples.size() < 4)
    throw CalibrationError(
        "need >= 4 samples: 2 saturated at distinct vt and 2 sub-critical at distinct "
        "gaps");
  const double pw = samples[0].pw;
  for (const auto& s : samples) {
    if (s.pw <= 0.0 || s.t_gap <= 0.0)
      throw CalibrationError("samples need positive pw and t_gap");
    if (std::abs(s.pw - pw) > 1e-12 * pw)
      throw CalibrationError("samples mix pulse widths; fit one pw at a time");
    if (s.dvt_observed <= 0.0)
      throw CalibrationError("non-positive dvt sample; the model covers program shifts only");
  }

  std::vector<double> candidates;
  if (t_critical_hint > 0.0) {
    candidates.push_back(t_critical_hint);
  } else {
    for (const auto& s : samples) candidates.push_back(s.t_gap);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  std::optional<StagedFit> best;
  std::optional<CalibrationError> last_err;
  for (double tc : candidates) {
    try {
      StagedFit cand = fit_at_tc(samples, pw, tc);
      if (!best || cand.sse < best->sse) best = cand;
    } catch (const CalibrationError& e) {
      last_err = e;
    }
  }
  if (!best) throw last_err ? *last_err : CalibrationError("no feasible t_critical candidate");
  return best->fit;
}

kv::Record to_record(const DeviceFit& fit) {
  kv::Record r;
  r.set_double("pw_s", fit.pw);
  r.set_double("A", fit.a_coeff);
  r.set_double("B", fit.b_coeff);
  r.set_double("C1", fit.c1);
  r.set_double("C2", fit.c2);
  r.set_double("t_critical_s", fit.t_critical);
  return r;
}

DeviceFit fit_from_record(const kv::Record& rec) {
  DeviceFit f;
  f.pw = rec.get_double("pw_s");
  f.a_coeff = rec.get_double("A");
  f.b_coeff = rec.get_double("B");
  f.c1 = rec.get_double("C1");
  f.c2 = rec.get_double("C2");
  f.t_critical = rec.get_double("t_critical_s");
  return f;
}

FitFamily::FitFamily(std::vector<DeviceFit> fits) : fits_(std::move(fits)) {
  if (fits_.empty()) throw ConfigError("fit family needs at least one fit");
  std::sort(fits_.begin(), fits_.end(),
            [](const DeviceFit& a, const DeviceFit& b) { return a.pw < b.pw; });
  for (size_t i = 0; i < fits_.size(); ++i) {
    if (fits_[i].pw <= 0.0 || fits_[i].a_coeff <= 0.0 || fits_[i].t_critical <= 0.0)
      throw ConfigError("fit family entries need positive pw, A, t_critical");
    if (i && fits_[i].pw <= fits_[i - 1].pw * (1.0 + 1e-12))
      throw ConfigError("fit family has duplicate pulse widths");
  }
}

FitFamily FitFamily::load(const std::string& path) {
  return from_document(kv::load_file(path));
}

FitFamily FitFamily::from_document(const kv::Document& doc) {
  std::vector<DeviceFit> fits;
  fits.reserve(doc.records.size());
  for (const auto& rec : doc.records) fits.push_back(fit_from_record(rec));
  return FitFamily(std::move(fits));
}

kv::Document FitFamily::to_document() const {
  kv::Document doc;
  for (const auto& f : fits_) doc.records.push_back(to_record(f));
  return doc;
}

double FitFamily::max_t_critical() const {
  double m = 0.0;
  for (const auto& f : fits_) m = std::max(m, f.t_critical);
  return m;
}

DeviceFit FitFamily::at_pw(double pw) const {
  if (pw <= 0.0) throw ConfigError("at_pw: pw must be positive");
  for (const auto& f : fits_)
    if (std::abs(f.pw - pw) <= 1e-9 * pw) return f;
  if (fits_.size() == 1) {
    DeviceFit f = fits_.front();
    f.pw = pw;
    return f;
  }

  // Segment endpoints: clamp to the outermost segment beyond the anchors so
  // extrapolation continues the end slope of the A power law while the gap
  // law is held at the boundary values.
  size_t hi = 1;
  while (hi + 1 < fits_.size() && fits_[hi].pw < pw) ++hi;
  const DeviceFit& f0 = fits_[hi - 1];
  const DeviceFit& f1 = fits_[hi];

  const double lx0 = std::log10(f0.pw), lx1 = std::log10(f1.pw);
  const double t = (std::log10(pw) - lx0) / (lx1 - lx0);  // unclamped: extrapolates A
  const double tcl = std::clamp(t, 0.0, 1.0);             // clamped: holds gap law

  // Interpolate gauge-independent quantities, then rebuild in the gauge.
  const auto qsat = [](const DeviceFit& f) {
    return std::max(0.0, f.c1 * std::log10(f.t_critical) + f.c2);
  };
  const double la = (1.0 - t) * std::log10(f0.a_coeff * qsat(f0)) +
                    t * std::log10(f1.a_coeff * qsat(f1));
  DeviceFit out;
  out.pw = pw;
  out.a_coeff = std::pow(10.0, la);
  out.b_coeff = (1.0 - tcl) * f0.b_coeff + tcl * f1.b_coeff;
  out.t_critical = (1.0 - tcl) * f0.t_critical + tcl * f1.t_critical;
  const double c1n0 = f0.c1 / qsat(f0), c1n1 = f1.c1 / qsat(f1);
  out.c1 = (1.0 - tcl) * c1n0 + tcl * c1n1;
  out.c2 = 1.0 - out.c1 * std::log10(out.t_critical);
  return out;
}

const FitFamily& FitFamily::builtin_default() {
  // Calibrated against the published update-noise column (sigma/mu of
  // delta-Vt at p = 0.5) and the requirement that total delta-Vt for a fixed
  // total ON time decreases as the division count grows; see
  // tools/calibrate.cpp for the search and the verification sweeps.
  static const FitFamily family(std::vector<DeviceFit>{
      {2.5e-6, 0.01375, -0.8, 0.08, 1.16, 0.01},
      {5.0e-6, 0.029, -0.8, 0.08, 1.16, 0.01},
      {2.5e-5, 0.1625, -0.8, 0.08, 1.16, 0.01},
      {1.0e-4, 0.7, -0.8, 0.04, 1.08, 0.01},
  });
  return family;
}

}  // namespace ctfsim
