#include "casimirtc/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "casimirtc/errors.hpp"
#include "casimirtc/instrument.hpp"

namespace casimirtc {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955126;
// Keeps inverse-variance weights finite for noiseless fits.
constexpr double kSigmaFloorK = 1e-15;

struct ErfModel {
  // Parameters in mK relative to an origin temperature, which keeps the normal matrix well scaled.
  double origin_k;
  std::span<const double> t_k;
  std::span<const double> r;

  double cost(const Eigen::Vector3d& p) const {
    const double scale = p[1] / (2.0 * kErfTenNinety);
    double sum = 0.0;
    for (std::size_t i = 0; i < t_k.size(); ++i) {
      const double u = ((t_k[i] - origin_k) * 1e3 - p[0]) / scale;
      const double e = 0.5 * p[2] * (1.0 + std::erf(u)) - r[i];
      sum += e * e;
    }
    return sum;
  }

  // Accumulates J^T J and J^T e for residual e = model - data.
  double normal_equations(const Eigen::Vector3d& p, Eigen::Matrix3d& jtj, Eigen::Vector3d& jte) const {
    const double scale = p[1] / (2.0 * kErfTenNinety);
    jtj.setZero();
    jte.setZero();
    double sum = 0.0;
    for (std::size_t i = 0; i < t_k.size(); ++i) {
      const double x = (t_k[i] - origin_k) * 1e3 - p[0];
      const double u = x / scale;
      const double g = kTwoOverSqrtPi * std::exp(-u * u);
      const double e = 0.5 * p[2] * (1.0 + std::erf(u)) - r[i];
      Eigen::Vector3d j;
      j[0] = -0.5 * p[2] * g / scale;
      j[1] = -0.5 * p[2] * g * u / p[1];
      j[2] = 0.5 * (1.0 + std::erf(u));
      jtj.noalias() += j * j.transpose();
      jte.noalias() += j * e;
      sum += e * e;
    }
    return sum;
  }
};

// Linear interpolation of the first upward crossing of `level`.
std::optional<double> crossing(std::span<const double> t, std::span<const double> r, double level) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (r[i - 1] < level && r[i] >= level) {
      return t[i - 1] + (level - r[i - 1]) * (t[i] - t[i - 1]) / (r[i] - r[i - 1]);
    }
  }
  return std::nullopt;
}

struct MergedPoint {
  double field_gauss;
  double t_star_k;
  double sigma_k;
};

std::vector<MergedPoint> merge_by_field(std::span<const FieldFit> fits) {
  std::map<double, std::pair<double, double>> acc;  // field -> (sum w t, sum w)
  for (const FieldFit& f : fits) {
    const double s = std::max(f.fit.sigma_t_star_k, kSigmaFloorK);
    const double w = 1.0 / (s * s);
    auto& a = acc[f.field_gauss];
    a.first += w * f.fit.t_star_k;
    a.second += w;
  }
  std::vector<MergedPoint> out;
  out.reserve(acc.size());
  for (const auto& [field, a] : acc) out.push_back({field, a.first / a.second, 1.0 / std::sqrt(a.second)});
  return out;
}

DeltaCurve assemble(std::span<const MergedPoint> merged, SampleKind kind, const TcEstimate& tc, bool shared) {
  DeltaCurve curve;
  curve.kind = kind;
  curve.t_c = tc;
  curve.shared_t_c = shared;
  curve.points.reserve(merged.size());
  for (const MergedPoint& m : merged) {
    DeltaPoint p;
    p.field_gauss = m.field_gauss;
    p.delta_mk = (tc.t_c_k - m.t_star_k) * 1e3;
    p.sigma_local_mk = m.sigma_k * 1e3;
    p.sigma_mk = std::hypot(tc.sigma_k, m.sigma_k) * 1e3;
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace

FitResult fit_transition(const TransitionCurve& curve, const FitOptions& options) {
  const std::size_t n = curve.temperature_k.size();
  if (n < 20 || curve.resistance_ohm.size() != n) throw InputError("fit_transition: need at least 20 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(curve.temperature_k[i] > curve.temperature_k[i - 1])) {
      throw InputError("fit_transition: temperatures must be strictly increasing");
    }
  }

  std::vector<double> sorted(curve.resistance_ohm);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double r_n0 = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) r_n0 += sorted[i];
  r_n0 /= static_cast<double>(tail);
  if (!(r_n0 > 0.0)) throw InputError("fit_transition: no normal-state plateau");

  const auto below = std::count_if(curve.resistance_ohm.begin(), curve.resistance_ohm.end(),
                                   [&](double r) { return r < 0.2 * r_n0; });
  const auto above = std::count_if(curve.resistance_ohm.begin(), curve.resistance_ohm.end(),
                                   [&](double r) { return r > 0.8 * r_n0; });
  if (static_cast<std::size_t>(below) * 10 < n || static_cast<std::size_t>(above) * 10 < n) {
    throw InputError("fit_transition: curve does not cover both resistance plateaus");
  }

  const auto t_half = crossing(curve.temperature_k, curve.resistance_ohm, 0.5 * r_n0);
  if (!t_half) throw InputError("fit_transition: no half-maximum crossing");
  const auto t10 = crossing(curve.temperature_k, curve.resistance_ohm, 0.1 * r_n0);
  const auto t90 = crossing(curve.temperature_k, curve.resistance_ohm, 0.9 * r_n0);
  double width0_mk = (t10 && t90 && *t90 > *t10) ? (*t90 - *t10) * 1e3 : 0.0;
  const double grid_mk = (curve.temperature_k.back() - curve.temperature_k.front()) * 1e3;
  if (!(width0_mk > 0.0)) width0_mk = grid_mk / 8.0;

  const ErfModel model{*t_half, curve.temperature_k, curve.resistance_ohm};
  Eigen::Vector3d p(0.0, width0_mk, r_n0);
  Eigen::Matrix3d jtj;
  Eigen::Vector3d jte;
  double cost = model.normal_equations(p, jtj, jte);
  double lambda = 1e-3;
  double last_step = std::numeric_limits<double>::infinity();

  FitResult result;
  for (int it = 1; it <= options.max_iterations; ++it) {
    result.iterations = it;
    Eigen::Matrix3d a = jtj;
    for (int k = 0; k < 3; ++k) a(k, k) += lambda * jtj(k, k);
    const Eigen::Vector3d step = a.ldlt().solve(-jte);
    if (!step.allFinite()) throw FitError("fit_transition: singular normal equations", it, last_step);

    // Relative change, with t_star measured against its absolute temperature.
    const double origin_mk = *t_half * 1e3;
    last_step = std::max({std::abs(step[0]) / std::abs(origin_mk + p[0]), std::abs(step[1]) / std::abs(p[1]),
                          std::abs(step[2]) / std::abs(p[2])});

    const Eigen::Vector3d trial = p + step;
    const double trial_cost = (trial[1] > 0.0 && trial[2] > 0.0) ? model.cost(trial)
                                                                  : std::numeric_limits<double>::infinity();
    if (trial_cost <= cost) {
      p = trial;
      cost = model.normal_equations(p, jtj, jte);
      lambda = std::max(lambda * 0.1, 1e-12);
    } else {
      lambda *= 10.0;
    }
    if (last_step <= options.relative_tolerance || cost == 0.0) {
      result.converged = true;
      break;
    }
    if (lambda > 1e16) break;
  }
  if (!result.converged) {
    throw FitError("fit_transition: did not converge", result.iterations, last_step);
  }

  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = cost / dof;
  const Eigen::Matrix3d cov = s2 * jtj.inverse();

  result.t_star_k = *t_half + p[0] * 1e-3;
  result.width_mk = p[1];
  result.r_n = p[2];
  result.sigma_t_star_k = std::sqrt(std::max(cov(0, 0), 0.0)) * 1e-3;
  result.sigma_width_mk = std::sqrt(std::max(cov(1, 1), 0.0));
  result.sigma_r_n = std::sqrt(std::max(cov(2, 2), 0.0));
  result.residual_norm = std::sqrt(cost / static_cast<double>(n)) / p[2];

  // A width below the sample spacing is a step, which the grid cannot resolve.
  const double spacing_mk = grid_mk / static_cast<double>(n - 1);
  if (result.width_mk < spacing_mk || !std::isfinite(result.sigma_t_star_k) || !std::isfinite(result.sigma_width_mk)) {
    throw FitError("fit_transition: degenerate fit (width below sample spacing)", result.iterations, last_step);
  }
  return result;
}

TcEstimate estimate_t_c(std::span<const FieldFit> fits) {
  const std::vector<MergedPoint> merged = merge_by_field(fits);
  if (merged.size() < 3) throw InputError("T_c regression needs at least three distinct fields");

  // Weighted least squares of t_star = c0 + c1 H^2.
  double sw = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (const MergedPoint& m : merged) {
    const double w = 1.0 / (m.sigma_k * m.sigma_k);
    const double x = m.field_gauss * m.field_gauss;
    sw += w;
    sx += w * x;
    sxx += w * x * x;
    sy += w * m.t_star_k;
    sxy += w * x * m.t_star_k;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 1e-12 * sw * sxx)) throw InputError("T_c regression is rank deficient");
  TcEstimate tc;
  tc.t_c_k = (sxx * sy - sx * sxy) / det;
  tc.sigma_k = std::sqrt(sxx / det);
  tc.alpha_mk_per_g2 = -(sw * sxy - sx * sy) / det * 1e3;
  return tc;
}

DeltaCurve build_delta_curve(std::span<const FieldFit> fits, SampleKind kind) {
  const TcEstimate tc = estimate_t_c(fits);
  const std::vector<MergedPoint> merged = merge_by_field(fits);
  return assemble(merged, kind, tc, false);
}

DeltaCurve build_delta_curve(std::span<const FieldFit> fits, SampleKind kind, const TcEstimate& shared_t_c) {
  const std::vector<MergedPoint> merged = merge_by_field(fits);
  if (merged.empty()) throw InputError("delta curve needs at least one fit");
  return assemble(merged, kind, shared_t_c, true);
}

std::vector<DeltaPoint> difference_curve(const DeltaCurve& film, const DeltaCurve& cavity) {
  if (film.points.size() != cavity.points.size()) throw InputError("difference: field grids differ in length");
  // A common T_c cancels in the difference.
  const bool common_t_c = film.t_c.t_c_k == cavity.t_c.t_c_k && film.t_c.sigma_k == cavity.t_c.sigma_k;
  std::vector<DeltaPoint> out(film.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const DeltaPoint& f = film.points[i];
    const DeltaPoint& c = cavity.points[i];
    if (f.field_gauss != c.field_gauss) throw InputError("difference: field grids do not match");
    out[i].field_gauss = f.field_gauss;
    out[i].delta_mk = f.delta_mk - c.delta_mk;
    out[i].sigma_local_mk = std::hypot(f.sigma_local_mk, c.sigma_local_mk);
    out[i].sigma_mk = common_t_c ? out[i].sigma_local_mk : std::hypot(f.sigma_mk, c.sigma_mk);
  }
  return out;
}

DerivativeCurve derivative_curve(const DeltaCurve& curve, int window) {
  const int n = static_cast<int>(curve.points.size());
  if (window < 3 || window % 2 == 0) throw InputError("derivative window must be odd and >= 3");
  if (window > n) throw InputError("derivative window exceeds the number of points");

  DerivativeCurve out;
  out.kind = curve.kind;
  out.window = window;
  out.points.reserve(static_cast<std::size_t>(n));
  const int half = window / 2;
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - half, 0, n - window);
    double mx = 0, my = 0;
    for (int k = start; k < start + window; ++k) {
      mx += curve.points[static_cast<std::size_t>(k)].field_gauss;
      my += curve.points[static_cast<std::size_t>(k)].delta_mk;
    }
    mx /= window;
    my /= window;
    double sxx = 0, sxy = 0, var = 0;
    for (int k = start; k < start + window; ++k) {
      const DeltaPoint& pt = curve.points[static_cast<std::size_t>(k)];
      const double dx = pt.field_gauss - mx;
      sxx += dx * dx;
      sxy += dx * (pt.delta_mk - my);
      var += dx * dx * pt.sigma_local_mk * pt.sigma_local_mk;
    }
    DerivativePoint d;
    d.field_gauss = curve.points[static_cast<std::size_t>(i)].field_gauss;
    d.slope = sxy / sxx;
    d.sigma = std::sqrt(var) / sxx;
    d.one_sided = start != i - half;
    out.points.push_back(d);
  }
  return out;
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw InputError("linear fit needs at least three points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

LinearityConvergenceReport linearity_and_convergence_report(const DerivativeCurve& film, const DerivativeCurve& cavity,
                                                            double low_field_limit_gauss,
                                                            double convergence_threshold) {
  if (film.points.size() != cavity.points.size()) throw InputError("derivative grids differ in length");
  LinearityConvergenceReport rep;
  rep.low_field_limit_gauss = low_field_limit_gauss;
  rep.convergence_threshold = convergence_threshold;

  std::vector<double> lx, lf, lc;
  for (std::size_t i = 0; i < film.points.size(); ++i) {
    const DerivativePoint& f = film.points[i];
    const DerivativePoint& c = cavity.points[i];
    if (f.field_gauss != c.field_gauss) throw InputError("derivative grids do not match");
    rep.fields_gauss.push_back(f.field_gauss);
    const double diff = f.slope - c.slope;
    rep.relative_difference.push_back(diff == 0.0 ? 0.0 : diff / f.slope);
    if (f.field_gauss <= low_field_limit_gauss) {
      lx.push_back(f.field_gauss);
      lf.push_back(f.slope);
      lc.push_back(c.slope);
    }
  }
  if (lx.size() >= 3) {
    rep.r2_film_low_field = linear_fit_r2(lx, lf);
    rep.r2_cavity_low_field = linear_fit_r2(lx, lc);
  }
  // Smallest grid field from which every relative difference stays below the threshold.
  for (std::size_t i = rep.fields_gauss.size(); i-- > 0;) {
    if (!(std::abs(rep.relative_difference[i]) < convergence_threshold)) break;
    rep.convergence_field_gauss = rep.fields_gauss[i];
  }
  return rep;
}

Detection detect_shift(std::span<const DeltaPoint> difference, double min_field_gauss, double z_cap) {
  Detection d;
  double sw = 0, swx = 0;
  bool exact = false;
  double exact_sum = 0;
  int exact_n = 0;
  for (const DeltaPoint& p : difference) {
    if (p.field_gauss < min_field_gauss) continue;
    ++d.n_points;
    if (p.sigma_mk <= 0.0) {
      exact = true;
      exact_sum += p.delta_mk;
      ++exact_n;
      continue;
    }
    const double w = 1.0 / (p.sigma_mk * p.sigma_mk);
    sw += w;
    swx += w * p.delta_mk;
  }
  if (d.n_points == 0) throw InputError("detection: no difference points above the minimum field");
  if (exact) {
    d.mean_difference_mk = exact_sum / exact_n;
    d.sigma_mk = 0.0;
  } else {
    d.mean_difference_mk = swx / sw;
    d.sigma_mk = 1.0 / std::sqrt(sw);
  }
  const double z = d.sigma_mk > 0.0 ? d.mean_difference_mk / d.sigma_mk
                                    : (d.mean_difference_mk == 0.0 ? 0.0 : std::copysign(z_cap, d.mean_difference_mk));
  d.capped = std::abs(z) >= z_cap;
  d.z = d.capped ? std::copysign(z_cap, z) : z;
  return d;
}

AsymptoticShift estimate_asymptotic_shift(std::span<const DeltaPoint> difference, const DeltaCurve& cavity,
                                          double delta_v_mk) {
  if (difference.size() != cavity.points.size() || difference.empty()) {
    throw InputError("asymptotic shift: difference and cavity grids differ");
  }
  if (!(delta_v_mk > 0.0)) throw InputError("asymptotic shift: delta_v must be > 0");
  double sgg = 0.0, sgd = 0.0;
  for (std::size_t i = 0; i < difference.size(); ++i) {
    if (difference[i].field_gauss != cavity.points[i].field_gauss) {
      throw InputError("asymptotic shift: field grids do not match");
    }
    const double dc = std::max(cavity.points[i].delta_mk, 0.0);
    const double g = dc / (dc + delta_v_mk);
    const double s = std::max(difference[i].sigma_mk, kSigmaFloorK * 1e3);
    const double w = 1.0 / (s * s);
    sgg += w * g * g;
    sgd += w * g * difference[i].delta_mk;
  }
  if (!(sgg > 0.0)) throw InputError("asymptotic shift: no cavity depression to scale against");
  return {sgd / sgg, 1.0 / std::sqrt(sgg), delta_v_mk};
}

DatasetAnalysis analyze_dataset(std::span<const TransitionCurve> curves, const AnalysisOptions& options) {
  DatasetAnalysis out;
  std::vector<FieldFit> film_fits, cavity_fits;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const TransitionCurve& c = curves[i];
    CurveFitRecord rec;
    rec.curve_index = i;
    rec.field_gauss = c.field_gauss;
    rec.kind = c.kind;
    rec.repetition = c.repetition;
    try {
      rec.fit = fit_transition(c, options.fit);
      (c.kind == SampleKind::film ? film_fits : cavity_fits).push_back({c.field_gauss, *rec.fit});
    } catch (const InputError& e) {
      rec.error = e.what();
      ++out.fit_failures;
    } catch (const FitError& e) {
      rec.error = e.what();
      ++out.fit_failures;
    }
    out.fits.push_back(std::move(rec));
  }

  out.film = build_delta_curve(film_fits, SampleKind::film);
  if (static_cast<int>(out.film.points.size()) >= options.derivative_window) {
    out.film_derivative = derivative_curve(out.film, options.derivative_window);
  } else {
    out.warnings.push_back("too few film fields for the derivative window");
  }

  if (cavity_fits.empty()) {
    out.warnings.push_back("no cavity curves: difference step skipped");
    return out;
  }
  out.cavity = build_delta_curve(cavity_fits, SampleKind::cavity, out.film.t_c);
  try {
    out.difference = difference_curve(out.film, *out.cavity);
    out.detection = detect_shift(*out.difference, options.detection_min_field_gauss);
    if (options.h_v_gauss > 0.0 && out.film.t_c.alpha_mk_per_g2 > 0.0) {
      const double delta_v = out.film.t_c.alpha_mk_per_g2 * options.h_v_gauss * options.h_v_gauss;
      out.asymptotic_shift = estimate_asymptotic_shift(*out.difference, *out.cavity, delta_v);
    }
  } catch (const InputError& e) {
    out.warnings.push_back(std::string("difference step skipped: ") + e.what());
    out.difference.reset();
  }
  if (out.film_derivative && static_cast<int>(out.cavity->points.size()) >= options.derivative_window) {
    out.cavity_derivative = derivative_curve(*out.cavity, options.derivative_window);
    if (out.cavity_derivative->points.size() == out.film_derivative->points.size()) {
      try {
        out.report = linearity_and_convergence_report(*out.film_derivative, *out.cavity_derivative,
                                                      options.low_field_limit_gauss);
      } catch (const InputError& e) {
        out.warnings.push_back(std::string("convergence report skipped: ") + e.what());
      }
    }
  }
  return out;
}

}  // namespace casimirtc
