#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "casimirtc/analysis.hpp"
#include "casimirtc/instrument.hpp"
#include "casimirtc/model.hpp"
#include "casimirtc/protocol.hpp"

namespace casimirtc {

struct SensitivityOptions {
  double z_cap = 1e6;
  double detection_threshold = 3.0;
  /// Worker threads; 0 selects std::thread::hardware_concurrency(). Results do not depend on it.
  unsigned threads = 0;
  /// Trials use substreams trial_offset .. trial_offset + trials - 1.
  std::uint64_t trial_offset = 0;
  AnalysisOptions analysis;
};

/// One full simulate-and-analyze pass.
struct TrialOutcome {
  bool ok = false;
  int fit_failures = 0;
  std::vector<double> delta_errors_mk;  ///< extracted minus true delta, film then cavity, per field
  Detection detection;
  std::vector<double> relative_derivative_difference;  ///< per field
};

TrialOutcome run_trial(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                       std::uint64_t trial, const SensitivityOptions& options = {});

struct SensitivityReport {
  double delta_n_mk = 0.0;
  int trials = 0;
  int failed_trials = 0;
  bool valid = true;  ///< at most 1% of trials failed
  double detection_z = 0.0;        ///< mean over trials
  double detection_z_std = 0.0;
  double detection_rate = 0.0;     ///< fraction of trials with z >= threshold
  bool z_capped = false;
  double mean_difference_mk = 0.0;
  double mean_difference_sigma_mk = 0.0;  ///< mean reported standard error of the weighted difference
  double derivative_contrast = 0.0;       ///< mean relative derivative difference at the field nearest h_v
  double derivative_contrast_sigma = 0.0;
  double contrast_field_gauss = 0.0;
  double calibrated_sigma_r = 0.0;  ///< resistance noise the study ran with
  double runtime_s = 0.0;           ///< wall clock; not part of any serialized report
  std::vector<double> z_values;
};

/// Requires trials >= 100.
SensitivityReport run_sensitivity(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                  int trials, const SensitivityOptions& options = {});

/// Pooled single-measurement delta std at a given resistance noise (no trial-count floor).
double measure_delta_n(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan, int trials,
                       const SensitivityOptions& options = {});

struct CalibrationOptions {
  int trials = 200;
  double sigma_lo = 0.0;
  double sigma_hi = 1.0;
  double bracket_rel_width = 1e-3;
  int max_iterations = 60;
};

struct CalibrationResult {
  double sigma_r = 0.0;
  double achieved_delta_n_mk = 0.0;
  int iterations = 0;
};

/// Bisection on resistance noise until the Monte Carlo delta_n matches the target. The same substreams
/// are reused at every bracket point so the objective is deterministic and monotone.
CalibrationResult calibrate_noise(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                  double target_delta_n_mk, double tolerance = 0.10,
                                  const CalibrationOptions& calibration = {}, const SensitivityOptions& options = {});

struct ContrastStudy {
  std::vector<double> fields_gauss;
  std::vector<double> model_contrast;  ///< exact model derivatives
  std::vector<double> mean_contrast;   ///< Monte Carlo, window-regressed derivatives
  std::vector<double> sigma_contrast;
  double model_contrast_at_h_v = 0.0;
  bool model_contrast_ok = false;  ///< model contrast at h_v >= 20%
  int trials = 0;
  int failed_trials = 0;
};

ContrastStudy derivative_contrast_study(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                                        int trials, const SensitivityOptions& options = {});

/// Relative model derivative difference (film - cavity) / film at field h.
double model_derivative_contrast(const ModelParams& params, double h_gauss);

}  // namespace casimirtc
