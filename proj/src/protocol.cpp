#include "casimirtc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "casimirtc/errors.hpp"

namespace casimirtc {

void SweepPlan::validate() const {
  if (fields_gauss.empty()) throw InputError("sweep plan: field list is empty");
  for (std::size_t i = 0; i < fields_gauss.size(); ++i) {
    if (!(fields_gauss[i] >= 0.0) || !std::isfinite(fields_gauss[i])) {
      throw InputError("sweep plan: fields must be finite and >= 0");
    }
    if (i > 0 && !(fields_gauss[i] > fields_gauss[i - 1])) {
      throw InputError("sweep plan: fields must be strictly increasing");
    }
  }
  if (n_points < 20) throw InputError("sweep plan: n_points must be >= 20");
  if (!(t_span_k > 0.0)) throw InputError("sweep plan: t_span must be > 0");
  if (!(t_center_k > 0.0)) throw InputError("sweep plan: t_center must be > 0");
  if (repetitions < 1) throw InputError("sweep plan: repetitions must be >= 1");
}

std::vector<double> SweepPlan::temperature_grid() const {
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  const double lo = t_center_k - 0.5 * t_span_k;
  const double step = t_span_k / static_cast<double>(n_points - 1);
  for (int i = 0; i < n_points; ++i) grid[static_cast<std::size_t>(i)] = lo + step * i;
  return grid;
}

std::vector<double> reference_fields(const ModelParams& params, int count) {
  if (count < 2) throw InputError("reference field list needs at least two fields");
  std::vector<double> fields(static_cast<std::size_t>(count));
  const double lo = params.h_v_gauss, hi = 5.0 * params.h_v_gauss;
  for (int i = 0; i < count; ++i) fields[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return fields;
}

SweepPlan plan_sweep(const ModelParams& params, const InstrumentConfig& cfg, std::vector<double> fields_gauss) {
  if (fields_gauss.empty()) throw InputError("sweep plan: field list is empty");
  SweepPlan plan;
  plan.fields_gauss = std::move(fields_gauss);
  const double deepest_mk = film_delta(params, plan.fields_gauss.back());
  plan.t_center_k = params.t_c_k - 0.5 * deepest_mk * 1e-3;
  plan.t_span_k = 8.0 * cfg.transition_width_mk * 1e-3;
  plan.validate();
  return plan;
}

std::string CurveKey::seed_path() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "t%llu/f%d/%s/r%d", static_cast<unsigned long long>(trial), field_index,
                kind == SampleKind::film ? "film" : "cavity", repetition);
  return buf;
}

Acquisition acquire_curve(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                          const CurveKey& key) {
  if (key.field_index < 0 || static_cast<std::size_t>(key.field_index) >= plan.fields_gauss.size()) {
    throw InputError("field index outside the sweep plan");
  }
  Acquisition acq;
  TransitionCurve& curve = acq.curve;
  curve.field_gauss = realized_field(cfg, plan.fields_gauss[static_cast<std::size_t>(key.field_index)]);
  curve.kind = key.kind;
  curve.field_index = key.field_index;
  curve.repetition = key.repetition;
  curve.seed_path = key.seed_path();

  acq.truth.delta_mk = delta_of(params, curve.field_gauss, key.kind);
  acq.truth.t_star_k = params.t_c_k - acq.truth.delta_mk * 1e-3;

  const std::vector<double> grid = plan.temperature_grid();
  const double core_lo = grid.front() + 0.1 * plan.t_span_k;
  const double core_hi = grid.back() - 0.1 * plan.t_span_k;
  curve.midpoint_in_core = acq.truth.t_star_k >= core_lo && acq.truth.t_star_k <= core_hi;

  NoiseStream noise(cfg.seed, NoiseStream::key(key.trial, static_cast<std::uint64_t>(key.field_index), key.kind,
                                               static_cast<std::uint64_t>(key.repetition)));
  curve.temperature_k.reserve(grid.size());
  curve.resistance_ohm.reserve(grid.size());
  curve.clamped.reserve(grid.size());
  for (double t : grid) {
    const Measurement m = measure_resistance(cfg, t, acq.truth.t_star_k, noise);
    // Clamped setpoints collapse onto the base temperature; keep the grid strictly increasing.
    if (m.clamped && !curve.temperature_k.empty() && curve.temperature_k.back() >= m.temperature_k) continue;
    curve.temperature_k.push_back(m.temperature_k);
    curve.resistance_ohm.push_back(m.resistance);
    curve.clamped.push_back(m.clamped ? 1 : 0);
  }
  return acq;
}

Dataset run_paired_experiment(const ModelParams& params, const InstrumentConfig& cfg, const SweepPlan& plan,
                              std::uint64_t trial) {
  params.validate();
  cfg.validate();
  plan.validate();
  Dataset ds;
  const std::size_t n = plan.fields_gauss.size() * static_cast<std::size_t>(plan.repetitions) * 2;
  ds.curves.reserve(n);
  ds.truth.reserve(n);
  for (int f = 0; f < static_cast<int>(plan.fields_gauss.size()); ++f) {
    for (int r = 0; r < plan.repetitions; ++r) {
      for (SampleKind kind : {SampleKind::film, SampleKind::cavity}) {
        Acquisition acq = acquire_curve(params, cfg, plan, CurveKey{trial, f, kind, r});
        ds.curves.push_back(std::move(acq.curve));
        ds.truth.push_back(acq.truth);
      }
    }
  }
  return ds;
}

}  // namespace casimirtc
