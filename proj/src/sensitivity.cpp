#include "casimirtc/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "casimirtc/errors.hpp"

namespace casimirtc {

namespace {

// Runs body(i) for i in [0, n). Each index writes only its own slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
}

std::vector<TrialOutcome> run_trials(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                     int trials, const SensitivityOptions& options) {
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
  parallel_for(outcomes.size(), options.threads, [&](std::size_t i) {
    outcomes[i] = run_trial(params, cfg, plan, options.trial_offset + i, options);
  });
  return outcomes;
}

double pooled_rms(const std::vector<TrialOutcome>& outcomes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrialOutcome& t : outcomes) {
    if (!t.ok) continue;
    for (double e : t.delta_errors_mk) sum += e * e;
    n += t.delta_errors_mk.size();
  }
  if (n == 0) throw InputError("no successful trials");
  return std::sqrt(sum / static_cast<double>(n));
}

std::size_t index_nearest(const std::vector<double>& fields, double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (std::abs(fields[i] - target) < std::abs(fields[best] - target)) best = i;
  }
  return best;
}

}  // namespace

TrialOutcome run_trial(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                       std::uint64_t trial, const SensitivityOptions& options) {
  TrialOutcome out;
  const Dataset ds = run_paired_experiment(params, cfg, plan, trial);
  DatasetAnalysis an;
  try {
    an = analyze_dataset(ds.curves, options.analysis);
  } catch (const InputError&) {
    out.fit_failures = static_cast<int>(ds.curves.size());
    return out;
  }
  out.fit_failures = an.fit_failures;
  if (an.fit_failures > 0 || !an.cavity || !an.difference || !an.detection) return out;

  auto push_errors = [&](const DeltaCurve& curve) {
    for (const DeltaPoint& p : curve.points) {
      out.delta_errors_mk.push_back(p.delta_mk - delta_of(params, p.field_gauss, curve.kind));
    }
  };
  push_errors(an.film);
  push_errors(*an.cavity);

  out.detection = *an.detection;
  if (std::abs(out.detection.z) >= options.z_cap) {
    out.detection.z = std::copysign(options.z_cap, out.detection.z);
    out.detection.capped = true;
  }
  if (an.report) out.relative_derivative_difference = an.report->relative_difference;
  out.ok = true;
  return out;
}

double measure_delta_n(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan, int trials,
                       const SensitivityOptions& options) {
  if (trials < 1) throw InputError("trials must be >= 1");
  return pooled_rms(run_trials(params, cfg, plan, trials, options));
}

SensitivityReport run_sensitivity(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                  int trials, const SensitivityOptions& options) {
  if (trials < 100) throw InputError("run_sensitivity needs at least 100 trials");
  params.validate();
  cfg.validate();
  plan.validate();
  const auto start = std::chrono::steady_clock::now();

  const std::vector<TrialOutcome> outcomes = run_trials(params, cfg, plan, trials, options);

  SensitivityReport rep;
  rep.trials = trials;
  rep.calibrated_sigma_r = cfg.resistance_noise;
  for (const TrialOutcome& t : outcomes) rep.failed_trials += t.ok ? 0 : 1;
  rep.valid = rep.failed_trials * 100 <= trials;
  rep.delta_n_mk = pooled_rms(outcomes);

  std::vector<double> realized;
  for (double h : plan.fields_gauss) realized.push_back(realized_field(cfg, h));
  const std::size_t contrast_idx = index_nearest(realized, params.h_v_gauss);
  rep.contrast_field_gauss = realized[contrast_idx];

  double sz = 0, szz = 0, sdiff = 0, ssig = 0, sc = 0, scc = 0;
  int nc = 0, hits = 0, n = 0;
  for (const TrialOutcome& t : outcomes) {
    if (!t.ok) continue;
    ++n;
    const double z = t.detection.z;
    rep.z_values.push_back(z);
    rep.z_capped = rep.z_capped || t.detection.capped;
    sz += z;
    szz += z * z;
    hits += z >= options.detection_threshold ? 1 : 0;
    sdiff += t.detection.mean_difference_mk;
    ssig += t.detection.sigma_mk;
    if (contrast_idx < t.relative_derivative_difference.size()) {
      const double c = t.relative_derivative_difference[contrast_idx];
      sc += c;
      scc += c * c;
      ++nc;
    }
  }
  rep.detection_z = sz / n;
  rep.detection_z_std = n > 1 ? std::sqrt(std::max(0.0, (szz - sz * sz / n) / (n - 1))) : 0.0;
  rep.detection_rate = static_cast<double>(hits) / n;
  rep.mean_difference_mk = sdiff / n;
  rep.mean_difference_sigma_mk = ssig / n;
  if (nc > 0) {
    rep.derivative_contrast = sc / nc;
    rep.derivative_contrast_sigma = nc > 1 ? std::sqrt(std::max(0.0, (scc - sc * sc / nc) / (nc - 1))) : 0.0;
  }
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

CalibrationResult calibrate_noise(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                  double target_delta_n_mk, double tolerance, const CalibrationOptions& calibration,
                                  const SensitivityOptions& options) {
  if (!(target_delta_n_mk > 0.0)) throw InputError("calibration target must be > 0");
  if (calibration.trials < 1) throw InputError("calibration needs at least one trial");

  auto objective = [&](double sigma) {
    InstrumentConfig c = cfg;
    c.resistance_noise = sigma;
    return measure_delta_n(params, c, plan, calibration.trials, options);
  };

  double lo = calibration.sigma_lo, hi = calibration.sigma_hi;
  if (!(lo >= 0.0) || !(hi > lo)) {
    throw CalibrationError("calibration bracket is empty", lo, hi, 0.0, 0.0);
  }
  double f_lo = objective(lo);
  double f_hi = objective(hi);
  if (!(f_lo <= target_delta_n_mk && target_delta_n_mk <= f_hi)) {
    throw CalibrationError("target delta_n is not bracketed by the noise range", lo, hi, f_lo, f_hi);
  }

  CalibrationResult res;
  double mid = 0.5 * (lo + hi), f_mid = 0.0;
  for (res.iterations = 1; res.iterations <= calibration.max_iterations; ++res.iterations) {
    mid = 0.5 * (lo + hi);
    f_mid = objective(mid);
    if (f_mid < target_delta_n_mk) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo <= calibration.bracket_rel_width * hi) break;
  }
  res.sigma_r = mid;
  res.achieved_delta_n_mk = f_mid;
  if (std::abs(f_mid - target_delta_n_mk) > tolerance * target_delta_n_mk) {
    throw CalibrationError("calibration ended outside tolerance", lo, hi, f_lo, f_hi);
  }
  return res;
}

double model_derivative_contrast(const ModelParams& params, double h_gauss) {
  const double film = delta_derivative(params, h_gauss, SampleKind::film).value;
  const double cavity = delta_derivative(params, h_gauss, SampleKind::cavity).value;
  const double diff = film - cavity;
  return diff == 0.0 ? 0.0 : diff / film;
}

ContrastStudy derivative_contrast_study(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                        int trials, const SensitivityOptions& options) {
  plan.validate();
  if (trials < 1) throw InputError("contrast study needs at least one trial");
  const bool covers = plan.fields_gauss.front() <= params.h_v_gauss && plan.fields_gauss.back() >= params.h_v_gauss;
  if (!covers) throw InputError("contrast study plan must cover fields below and around h_v");

  ContrastStudy study;
  study.trials = trials;
  for (double h : plan.fields_gauss) {
    const double f = realized_field(cfg, h);
    study.fields_gauss.push_back(f);
    study.model_contrast.push_back(f > 0.0 ? model_derivative_contrast(params, f) : 0.0);
  }
  study.model_contrast_at_h_v = model_derivative_contrast(params, params.h_v_gauss);
  study.model_contrast_ok = study.model_contrast_at_h_v >= 0.20;

  const std::vector<TrialOutcome> outcomes = run_trials(params, cfg, plan, trials, options);
  const std::size_t n_fields = study.fields_gauss.size();
  std::vector<double> s(n_fields, 0.0), ss(n_fields, 0.0);
  int n = 0;
  for (const TrialOutcome& t : outcomes) {
    if (!t.ok || t.relative_derivative_difference.size() != n_fields) {
      ++study.failed_trials;
      continue;
    }
    ++n;
    for (std::size_t i = 0; i < n_fields; ++i) {
      s[i] += t.relative_derivative_difference[i];
      ss[i] += t.relative_derivative_difference[i] * t.relative_derivative_difference[i];
    }
  }
  study.mean_contrast.assign(n_fields, 0.0);
  study.sigma_contrast.assign(n_fields, 0.0);
  for (std::size_t i = 0; i < n_fields && n > 0; ++i) {
    study.mean_contrast[i] = s[i] / n;
    study.sigma_contrast[i] = n > 1 ? std::sqrt(std::max(0.0, (ss[i] - s[i] * s[i] / n) / (n - 1))) : 0.0;
  }
  return study;
}

}  // namespace casimirtc
