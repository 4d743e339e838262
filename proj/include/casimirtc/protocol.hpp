#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "casimirtc/instrument.hpp"
#include "casimirtc/model.hpp"

namespace casimirtc {

/// Temperature sweep schedule shared by every curve of an experiment.
struct SweepPlan {
  std::vector<double> fields_gauss;  ///< requested fields, strictly increasing
  double t_center_k = 1.5;
  double t_span_k = 0.4;
  int n_points = 200;
  int repetitions = 1;

  void validate() const;
  /// Uniform grid of n_points over [center - span/2, center + span/2].
  std::vector<double> temperature_grid() const;
};

/// Ten fields uniformly spanning [h_v, 5 h_v].
std::vector<double> reference_fields(const ModelParams& params, int count = 10);

/// Centers the grid half-way between t_c and the deepest film transition; span is 8 transition widths.
SweepPlan plan_sweep(const ModelParams& params, const InstrumentConfig& cfg, std::vector<double> fields_gauss);

/// One fixed-field R(T) sweep as seen by the analysis.
struct TransitionCurve {
  double field_gauss = 0.0;  ///< realized coil field
  SampleKind kind = SampleKind::film;
  int field_index = 0;
  int repetition = 0;
  std::string seed_path;
  std::vector<double> temperature_k;
  std::vector<double> resistance_ohm;
  std::vector<std::uint8_t> clamped;  ///< per-sample clamped-setpoint marker
  bool midpoint_in_core = true;       ///< planned grid holds the transition inside its central 80%

  std::size_t size() const { return temperature_k.size(); }
};

namespace oracle {

/// Generating midpoint of a curve. Kept outside TransitionCurve so fits cannot see it.
struct GroundTruth {
  double t_star_k = 0.0;
  double delta_mk = 0.0;
};

}  // namespace oracle

struct Acquisition {
  TransitionCurve curve;
  oracle::GroundTruth truth;
};

/// Identifies a curve inside an experiment and selects its noise substream.
struct CurveKey {
  std::uint64_t trial = 0;
  int field_index = 0;
  SampleKind kind = SampleKind::film;
  int repetition = 0;

  std::string seed_path() const;
};

Acquisition acquire_curve(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                          const CurveKey& key);

/// Paired film and cavity curves for every field and repetition, ordered by (field, repetition, kind).
struct Dataset {
  std::vector<TransitionCurve> curves;
  std::vector<oracle::GroundTruth> truth;  ///< parallel to curves
};

Dataset run_paired_experiment(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                              std::uint64_t trial = 0);

}  // namespace casimirtc
