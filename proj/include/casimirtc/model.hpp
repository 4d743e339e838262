#pragma once

#include <string_view>

namespace casimirtc {

// Units throughout the model layer: field in gauss, depressions in millikelvin, t_c in kelvin.

enum class SampleKind { film, cavity };

std::string_view to_string(SampleKind kind);
SampleKind sample_kind_from_string(std::string_view name);

/// Physical constants of a paired film/cavity system.
struct ModelParams {
  double t_c_k = 1.5;             ///< zero-field transition temperature [K]
  double alpha = 0.6 / 22500.0;   ///< film coefficient, delta_f = alpha * H^2 [mK/G^2]
  double delta_inf_mk = 0.2;      ///< asymptotic film-minus-cavity shift [mK]
  double h_v_gauss = 50.0;        ///< crossover field [G]
  double cond_scale = 1.0;        ///< condensation energy scale (cancels in every depression)

  /// Film depression at the crossover field, alpha * h_v^2 [mK].
  double delta_v() const { return alpha * h_v_gauss * h_v_gauss; }

  /// Throws DomainError when an invariant is violated.
  void validate() const;
};

/// Film and cavity anchored at H_V = 50 G, delta_inf = 0.2 mK and delta_f(150 G) = 0.6 mK.
ModelParams calibrate_defaults();

struct EnergyBreakdown {
  double condensation = 0.0;
  double casimir = 0.0;
  double magnetic = 0.0;
  double residual = 0.0;  ///< magnetic - condensation - casimir
};

double film_delta(const ModelParams& p, double h_gauss);

double condensation_energy(const ModelParams& p, double delta_mk);

/// Phenomenological cavity term cond_scale * delta_inf * delta^2 / (delta + delta_v).
/// Linear in delta for delta >> delta_v, quadratic for delta << delta_v.
double casimir_shift(const ModelParams& p, double delta_mk);

/// Field work term cond_scale * alpha * H^2 * delta.
double magnetic_energy(const ModelParams& p, double h_gauss, double delta_mk);

EnergyBreakdown energy_balance(const ModelParams& p, double h_gauss, double delta_mk, bool with_casimir = true);

struct CavitySolution {
  double delta_mk = 0.0;
  double reduced_residual = 0.0;  ///< balance divided by cond_scale * delta at the root
  int iterations = 0;
};

/// Solves magnetic = condensation + casimir for delta > 0. Throws SolverError on non-convergence.
CavitySolution solve_cavity(const ModelParams& p, double h_gauss);

double cavity_delta(const ModelParams& p, double h_gauss);

double delta_of(const ModelParams& p, double h_gauss, SampleKind kind);

/// film_delta - cavity_delta.
double delta_difference(const ModelParams& p, double h_gauss);

struct DerivativeValue {
  double value = 0.0;     ///< d delta / dH [mK/G]
  bool one_sided = false; ///< true when evaluated by a forward difference at H = 0
};

/// Film: 2 alpha H. Cavity: implicit-function derivative of the solved balance; at H = 0 a forward
/// difference is used and flagged.
DerivativeValue delta_derivative(const ModelParams& p, double h_gauss, SampleKind kind);

/// Inverse map: the field at which the given depression is reached.
double critical_field(const ModelParams& p, double delta_mk, SampleKind kind);

/// casimir_shift / condensation_energy at the cavity root for field h.
double casimir_to_condensation_ratio(const ModelParams& p, double h_gauss);

}  // namespace casimirtc
