#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "casimirtc/model.hpp"
#include "casimirtc/protocol.hpp"

namespace casimirtc {

struct FitOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 100;
};

/// Least-squares erf fit of one R(T) curve.
struct FitResult {
  double t_star_k = 0.0;
  double sigma_t_star_k = 0.0;
  double width_mk = 0.0;
  double sigma_width_mk = 0.0;
  double r_n = 0.0;
  double sigma_r_n = 0.0;
  double residual_norm = 0.0;  ///< rms residual / r_n
  bool converged = false;
  int iterations = 0;
};

/// Throws InputError when the curve lacks 20 samples or either plateau, FitError on non-convergence.
FitResult fit_transition(const TransitionCurve& curve, const FitOptions& options = {});

struct FieldFit {
  double field_gauss = 0.0;
  FitResult fit;
};

struct TcEstimate {
  double t_c_k = 0.0;
  double sigma_k = 0.0;
  double alpha_mk_per_g2 = 0.0;  ///< film coefficient from the regression slope
};

struct DeltaPoint {
  double field_gauss = 0.0;
  double delta_mk = 0.0;
  double sigma_mk = 0.0;        ///< includes the T_c uncertainty
  double sigma_local_mk = 0.0;  ///< transition-temperature uncertainty only
};

struct DeltaCurve {
  SampleKind kind = SampleKind::film;
  std::vector<DeltaPoint> points;
  TcEstimate t_c;
  bool shared_t_c = false;  ///< T_c taken from another curve rather than regressed here
};

/// T_c from the weighted intercept of t_star against H^2. Repeated fields are merged by inverse-variance mean.
TcEstimate estimate_t_c(std::span<const FieldFit> fits);

/// delta(H) = T_c - t_star(H), with T_c regressed from these fits.
DeltaCurve build_delta_curve(std::span<const FieldFit> fits, SampleKind kind);
/// Same, with T_c supplied (the paired-sample convention for cavity curves).
DeltaCurve build_delta_curve(std::span<const FieldFit> fits, SampleKind kind, const TcEstimate& shared_t_c);

/// film - cavity per field. Grids must match exactly.
std::vector<DeltaPoint> difference_curve(const DeltaCurve& film, const DeltaCurve& cavity);

struct DerivativePoint {
  double field_gauss = 0.0;
  double slope = 0.0;  ///< mK/G
  double sigma = 0.0;
  bool one_sided = false;
};

struct DerivativeCurve {
  SampleKind kind = SampleKind::film;
  std::vector<DerivativePoint> points;
  int window = 5;
};

/// Local linear regression of delta on H over a sliding window; edge windows are shifted inward and flagged.
DerivativeCurve derivative_curve(const DeltaCurve& curve, int window = 5);

struct LinearityConvergenceReport {
  std::optional<double> r2_film_low_field;
  std::optional<double> r2_cavity_low_field;
  std::vector<double> fields_gauss;
  std::vector<double> relative_difference;  ///< (film - cavity) / film
  std::optional<double> convergence_field_gauss;
  double low_field_limit_gauss = 0.0;
  double convergence_threshold = 0.05;
};

LinearityConvergenceReport linearity_and_convergence_report(const DerivativeCurve& film, const DerivativeCurve& cavity,
                                                            double low_field_limit_gauss,
                                                            double convergence_threshold = 0.05);

/// Coefficient of determination of an ordinary least-squares line through (x, y).
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

struct Detection {
  double mean_difference_mk = 0.0;
  double sigma_mk = 0.0;
  double z = 0.0;
  bool capped = false;
  int n_points = 0;
};

/// Inverse-variance weighted mean of the difference over fields >= min_field, with z against zero.
Detection detect_shift(std::span<const DeltaPoint> difference, double min_field_gauss = 0.0, double z_cap = 1e6);

/// Amplitude of the constant-shift form difference = A * delta_c / (delta_c + delta_v), fitted by weighted
/// least squares in A with delta_v = alpha * h_v^2 fixed. Equals the high-field shift.
struct AsymptoticShift {
  double delta_inf_mk = 0.0;
  double sigma_mk = 0.0;
  double delta_v_mk = 0.0;
};

AsymptoticShift estimate_asymptotic_shift(std::span<const DeltaPoint> difference, const DeltaCurve& cavity,
                                          double delta_v_mk);

struct AnalysisOptions {
  /// Crossover field used by the asymptotic-shift estimate; <= 0 disables it.
  double h_v_gauss = 50.0;
  int derivative_window = 5;
  double low_field_limit_gauss = 15.0;
  double detection_min_field_gauss = 0.0;
  FitOptions fit;
};

struct CurveFitRecord {
  std::size_t curve_index = 0;
  double field_gauss = 0.0;
  SampleKind kind = SampleKind::film;
  int repetition = 0;
  std::optional<FitResult> fit;
  std::string error;
};

struct DatasetAnalysis {
  std::vector<CurveFitRecord> fits;
  int fit_failures = 0;
  DeltaCurve film;
  std::optional<DeltaCurve> cavity;
  std::optional<std::vector<DeltaPoint>> difference;
  std::optional<DerivativeCurve> film_derivative;
  std::optional<DerivativeCurve> cavity_derivative;
  std::optional<LinearityConvergenceReport> report;
  std::optional<Detection> detection;
  std::optional<AsymptoticShift> asymptotic_shift;
  std::vector<std::string> warnings;
};

/// Fits every curve, builds the film curve (regressed T_c) and the cavity curve (shared T_c), then the
/// difference, derivatives and detection statistic. Throws InputError when fewer than three film fields fit.
DatasetAnalysis analyze_dataset(std::span<const TransitionCurve> curves, const AnalysisOptions& options = {});

}  // namespace casimirtc
