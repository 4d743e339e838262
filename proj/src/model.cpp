#include "casimirtc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "casimirtc/errors.hpp"
#include "casimirtc/root_finding.hpp"

namespace casimirtc {

namespace {

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be finite and >= 0, got " + std::to_string(v));
  }
}

// Balance divided by cond_scale * delta. Strictly decreasing in delta with slope <= -1.
double reduced_balance(const ModelParams& p, double drive, double delta) {
  return drive - delta - p.delta_inf_mk * delta / (delta + p.delta_v());
}

// d/d delta of (condensation + casimir) / (cond_scale * delta).
double reduced_stiffness(const ModelParams& p, double delta) {
  const double s = delta + p.delta_v();
  return 1.0 + p.delta_inf_mk * p.delta_v() / (s * s);
}

}  // namespace

std::string_view to_string(SampleKind kind) {
  return kind == SampleKind::film ? "film" : "cavity";
}

SampleKind sample_kind_from_string(std::string_view name) {
  if (name == "film") return SampleKind::film;
  if (name == "cavity") return SampleKind::cavity;
  throw InputError("unknown sample kind '" + std::string(name) + "'");
}

void ModelParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be > 0");
  };
  positive(t_c_k, "t_c");
  positive(alpha, "alpha");
  positive(h_v_gauss, "h_v");
  positive(cond_scale, "cond_scale");
  require_nonnegative(delta_inf_mk, "delta_inf");
}

ModelParams calibrate_defaults() {
  ModelParams p;
  p.h_v_gauss = 50.0;
  p.delta_inf_mk = 0.2;
  // delta_f(3 H_V) = 0.6 mK
  p.alpha = 0.6 / (150.0 * 150.0);
  p.t_c_k = 1.5;
  p.cond_scale = 1.0;
  return p;
}

double film_delta(const ModelParams& p, double h_gauss) {
  require_nonnegative(h_gauss, "field");
  return p.alpha * h_gauss * h_gauss;
}

double condensation_energy(const ModelParams& p, double delta_mk) {
  require_nonnegative(delta_mk, "delta");
  return p.cond_scale * delta_mk * delta_mk;
}

double casimir_shift(const ModelParams& p, double delta_mk) {
  require_nonnegative(delta_mk, "delta");
  if (delta_mk == 0.0) return 0.0;
  return p.cond_scale * p.delta_inf_mk * delta_mk * delta_mk / (delta_mk + p.delta_v());
}

double magnetic_energy(const ModelParams& p, double h_gauss, double delta_mk) {
  require_nonnegative(h_gauss, "field");
  require_nonnegative(delta_mk, "delta");
  return p.cond_scale * p.alpha * h_gauss * h_gauss * delta_mk;
}

EnergyBreakdown energy_balance(const ModelParams& p, double h_gauss, double delta_mk, bool with_casimir) {
  EnergyBreakdown e;
  e.condensation = condensation_energy(p, delta_mk);
  e.casimir = with_casimir ? casimir_shift(p, delta_mk) : 0.0;
  e.magnetic = magnetic_energy(p, h_gauss, delta_mk);
  e.residual = e.magnetic - e.condensation - e.casimir;
  return e;
}

CavitySolution solve_cavity(const ModelParams& p, double h_gauss) {
  const double drive = film_delta(p, h_gauss);
  if (drive == 0.0) return {};

  // g(0) = drive > 0 and g(drive) = -delta_inf * drive / (drive + delta_v) <= 0.
  RootOptions opt;
  opt.f_tolerance = 1e-12 * std::min(1.0, drive);
  opt.max_iterations = 200;
  const auto root = solve_bracketed([&](double d) { return reduced_balance(p, drive, d); }, 0.0,
                                    drive + p.delta_inf_mk, opt);
  return {root.x, root.f, root.iterations};
}

double cavity_delta(const ModelParams& p, double h_gauss) {
  return solve_cavity(p, h_gauss).delta_mk;
}

double delta_of(const ModelParams& p, double h_gauss, SampleKind kind) {
  return kind == SampleKind::film ? film_delta(p, h_gauss) : cavity_delta(p, h_gauss);
}

double delta_difference(const ModelParams& p, double h_gauss) {
  return film_delta(p, h_gauss) - cavity_delta(p, h_gauss);
}

DerivativeValue delta_derivative(const ModelParams& p, double h_gauss, SampleKind kind) {
  require_nonnegative(h_gauss, "field");
  if (kind == SampleKind::film) return {2.0 * p.alpha * h_gauss, false};

  if (h_gauss == 0.0) {
    constexpr double step = 1e-3;
    return {(cavity_delta(p, step) - cavity_delta(p, 0.0)) / step, true};
  }
  const double delta = cavity_delta(p, h_gauss);
  return {2.0 * p.alpha * h_gauss / reduced_stiffness(p, delta), false};
}

double critical_field(const ModelParams& p, double delta_mk, SampleKind kind) {
  require_nonnegative(delta_mk, "delta");
  if (delta_mk == 0.0) return 0.0;
  // The balance is linear in H^2 at fixed delta.
  double required = delta_mk;
  if (kind == SampleKind::cavity) required += p.delta_inf_mk * delta_mk / (delta_mk + p.delta_v());
  const double h = std::sqrt(required / p.alpha);
  if (!std::isfinite(h)) throw SolverError("critical field inversion produced a non-finite field", 0, 0, 0, 0, 0);
  return h;
}

double casimir_to_condensation_ratio(const ModelParams& p, double h_gauss) {
  const double delta = cavity_delta(p, h_gauss);
  if (delta == 0.0) return p.delta_inf_mk / p.delta_v();
  return casimir_shift(p, delta) / condensation_energy(p, delta);
}

}  // namespace casimirtc
