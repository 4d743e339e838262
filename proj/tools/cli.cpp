#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "casimirtc/analysis.hpp"
#include "casimirtc/config.hpp"
#include "casimirtc/errors.hpp"
#include "casimirtc/model.hpp"
#include "casimirtc/protocol.hpp"
#include "casimirtc/run_files.hpp"
#include "casimirtc/sensitivity.hpp"

namespace casimirtc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCasimirForm = "phenomenological: delta_inf * delta^2 / (delta + delta_v)";

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string fields;
  std::string out_dir;
  bool noiseless = false;
};

// Thrown for bad flag values found after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_field_list(const std::string& text) {
  std::vector<double> fields;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw UsageError("--fields: empty entry");
    try {
      fields.push_back(parse_double(std::string_view(item).substr(b, e - b + 1)));
    } catch (const IoError&) {
      throw UsageError("--fields: '" + item + "' is not a number");
    }
  }
  if (fields.empty()) throw UsageError("--fields: no values");
  return fields;
}

RunConfig resolve_config(const CommonOptions& opt) {
  RunConfig cfg = default_run_config();
  if (!opt.config_path.empty()) {
    try {
      cfg = load_run_config(opt.config_path);
    } catch (const IoError& e) {
      throw InputError(e.what());
    }
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.instrument.seed = *opt.seed;
  }
  if (opt.noiseless) cfg.instrument = cfg.instrument.noiseless();
  if (!opt.fields.empty()) set_fields(cfg, parse_field_list(opt.fields));
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_fields = true) {
  cmd->add_option("--config", opt.config_path, "JSON run configuration");
  cmd->add_option("--seed", opt.seed, "master seed (overrides the config)");
  cmd->add_option("--out", opt.out_dir, "output directory (overrides the config)");
  cmd->add_flag("--noiseless", opt.noiseless, "zero every instrument noise term");
  if (with_fields) cmd->add_option("--fields", opt.fields, "comma-separated field list in gauss");
}

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

json fit_to_json(const FitResult& f) {
  return {{"t_star_K", f.t_star_k},     {"sigma_t_star_K", f.sigma_t_star_k}, {"width_mK", f.width_mk},
          {"sigma_width_mK", f.sigma_width_mk}, {"r_n_ohm", f.r_n},        {"sigma_r_n_ohm", f.sigma_r_n},
          {"residual_norm", f.residual_norm},   {"converged", f.converged}, {"iterations", f.iterations}};
}

// ---------------------------------------------------------------------------------------------------------

struct ModelCurveOptions {
  double h_min = 0.0;
  double h_max = 250.0;
  double step = 1.0;
};

int cmd_model_curve(const CommonOptions& common, const ModelCurveOptions& mc, std::ostream& out) {
  const RunConfig cfg = resolve_config(common);
  if (!(mc.step > 0.0) || !(mc.h_min >= 0.0) || !(mc.h_max >= mc.h_min)) {
    throw UsageError("model-curve: need 0 <= h-min <= h-max and step > 0");
  }
  const auto n = static_cast<long>(std::floor((mc.h_max - mc.h_min) / mc.step + 1e-9)) + 1;

  std::string csv = "# casimir_term=phenomenological\n";
  csv += "field_gauss,delta_film_mK,delta_cavity_mK,difference_mK,ddelta_dH_film,ddelta_dH_cavity\n";
  for (long i = 0; i < n; ++i) {
    const double h = mc.h_min + mc.step * static_cast<double>(i);
    const double df = film_delta(cfg.model, h);
    const double dc = cavity_delta(cfg.model, h);
    csv += fmt(h) + ',' + fmt(df) + ',' + fmt(dc) + ',' + fmt(df - dc) + ',' +
           fmt(delta_derivative(cfg.model, h, SampleKind::film).value) + ',' +
           fmt(delta_derivative(cfg.model, h, SampleKind::cavity).value) + '\n';
  }
  const fs::path path = fs::path(cfg.output_dir) / "model_curves.csv";
  write_file_atomic(path, csv);

  const double h3 = 3.0 * cfg.model.h_v_gauss;
  out << "wrote " << n << " rows to " << path.string() << "\n"
      << "casimir term: " << kCasimirForm << "\n"
      << "at H = 3 H_V = " << fixed(h3, 1) << " G: delta_film = " << fixed(film_delta(cfg.model, h3), 4)
      << " mK, delta_cavity = " << fixed(cavity_delta(cfg.model, h3), 4)
      << " mK, casimir/condensation = " << fixed(casimir_to_condensation_ratio(cfg.model, h3), 4) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------------------

int cmd_simulate(const CommonOptions& common, std::ostream& out) {
  const RunConfig cfg = resolve_config(common);
  const Dataset ds = run_paired_experiment(cfg.model, cfg.instrument, cfg.plan, 0);
  const fs::path manifest = write_dataset(cfg.output_dir, ds, to_json(cfg));

  out << "field_G      kind     samples  clamped  core\n";
  for (const TransitionCurve& c : ds.curves) {
    std::size_t clamped = 0;
    for (auto f : c.clamped) clamped += f;
    out << std::left << std::setw(13) << fixed(c.field_gauss, 4) << std::setw(9) << to_string(c.kind)
        << std::setw(9) << c.size() << std::setw(9) << clamped << (c.midpoint_in_core ? "yes" : "NO") << "\n";
  }
  out << "wrote " << ds.curves.size() << " curves, manifest " << manifest.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------------------------------------

struct AnalyzeOptions {
  std::string manifest;
  std::string out_dir;
  int window = 5;
  std::optional<double> h_v;
  double max_failure_fraction = 0.01;
};

std::string delta_rows(const DeltaCurve& c) {
  std::string s;
  for (const DeltaPoint& p : c.points) {
    s += std::string(to_string(c.kind)) + ',' + fmt(p.field_gauss) + ',' + fmt(p.delta_mk) + ',' + fmt(p.sigma_mk) + '\n';
  }
  return s;
}

std::string derivative_rows(const DerivativeCurve& c) {
  std::string s;
  for (const DerivativePoint& p : c.points) {
    s += std::string(to_string(c.kind)) + ',' + fmt(p.field_gauss) + ',' + fmt(p.slope) + ',' + fmt(p.sigma) + ',' +
         (p.one_sided ? "1" : "0") + '\n';
  }
  return s;
}

json delta_curve_json(const DeltaCurve& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"t_c_K", c.t_c.t_c_k},
          {"sigma_t_c_K", c.t_c.sigma_k},
          {"t_c_shared", c.shared_t_c},
          {"points", c.points.size()}};
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  LoadedDataset ds;
  try {
    ds = read_dataset(opt.manifest);
  } catch (const IoError& e) {
    err << "analyze: " << e.what() << "\n";
    return kIo;
  }

  AnalysisOptions aopt;
  aopt.derivative_window = opt.window;
  if (opt.h_v) {
    aopt.h_v_gauss = *opt.h_v;
  } else if (ds.config.contains("model") && ds.config["model"].contains("h_v_G")) {
    aopt.h_v_gauss = ds.config["model"]["h_v_G"].get<double>();
  }

  DatasetAnalysis an;
  try {
    an = analyze_dataset(ds.curves, aopt);
  } catch (const InputError& e) {
    err << "analyze: " << e.what() << "\n";
    return kFit;
  }

  const fs::path dir = opt.out_dir.empty() ? fs::path(opt.manifest).parent_path() : fs::path(opt.out_dir);

  std::string delta_csv = "kind,field_gauss,delta_mK,sigma_mK\n" + delta_rows(an.film);
  if (an.cavity) delta_csv += delta_rows(*an.cavity);
  write_file_atomic(dir / "delta_curve.csv", delta_csv);

  if (an.difference) {
    std::string csv = "field_gauss,difference_mK,sigma_mK\n";
    for (const DeltaPoint& p : *an.difference) csv += fmt(p.field_gauss) + ',' + fmt(p.delta_mk) + ',' + fmt(p.sigma_mk) + '\n';
    write_file_atomic(dir / "difference.csv", csv);
  }
  if (an.film_derivative) {
    std::string csv = "kind,field_gauss,ddelta_dH_mK_per_G,sigma_mK_per_G,one_sided\n" + derivative_rows(*an.film_derivative);
    if (an.cavity_derivative) csv += derivative_rows(*an.cavity_derivative);
    write_file_atomic(dir / "derivative.csv", csv);
  }

  json report;
  report["format_version"] = std::string(kRunFormatVersion);
  report["manifest"] = fs::path(opt.manifest).filename().string();
  report["casimir_term"] = kCasimirForm;
  report["t_c_convention"] = "H^2 -> 0 intercept of the film fits, shared with the cavity";
  json fits = json::array();
  for (const CurveFitRecord& r : an.fits) {
    json f = {{"curve", ds.entries[r.curve_index].file},
              {"field_gauss", r.field_gauss},
              {"kind", std::string(to_string(r.kind))},
              {"repetition", r.repetition}};
    if (r.fit) f["fit"] = fit_to_json(*r.fit);
    else f["error"] = r.error;
    fits.push_back(f);
  }
  report["fits"] = fits;
  report["fit_failures"] = an.fit_failures;
  report["film"] = delta_curve_json(an.film);
  report["film"]["alpha_mK_per_G2"] = an.film.t_c.alpha_mk_per_g2;
  if (an.cavity) report["cavity"] = delta_curve_json(*an.cavity);
  if (an.detection) {
    report["detection"] = {{"mean_difference_mK", an.detection->mean_difference_mk},
                           {"sigma_mK", an.detection->sigma_mk},
                           {"z", an.detection->z},
                           {"z_capped", an.detection->capped},
                           {"points", an.detection->n_points}};
  }
  if (an.asymptotic_shift) {
    report["asymptotic_shift"] = {{"delta_inf_mK", an.asymptotic_shift->delta_inf_mk},
                                  {"sigma_mK", an.asymptotic_shift->sigma_mk},
                                  {"delta_v_mK", an.asymptotic_shift->delta_v_mk},
                                  {"h_v_G", aopt.h_v_gauss}};
  }
  if (an.report) {
    json conv = {{"fields_gauss", an.report->fields_gauss},
                 {"relative_difference", an.report->relative_difference},
                 {"low_field_limit_gauss", an.report->low_field_limit_gauss},
                 {"threshold", an.report->convergence_threshold}};
    conv["r2_film_low_field"] = an.report->r2_film_low_field ? json(*an.report->r2_film_low_field) : json(nullptr);
    conv["r2_cavity_low_field"] = an.report->r2_cavity_low_field ? json(*an.report->r2_cavity_low_field) : json(nullptr);
    conv["convergence_field_gauss"] =
        an.report->convergence_field_gauss ? json(*an.report->convergence_field_gauss) : json(nullptr);
    report["convergence"] = conv;
  }
  report["warnings"] = an.warnings;
  write_file_atomic(dir / "analysis.json", dump_json(report));

  for (const std::string& w : an.warnings) err << "warning: " << w << "\n";
  out << "T_c = " << fixed(an.film.t_c.t_c_k, 7) << " +/- " << fixed(an.film.t_c.sigma_k, 7) << " K\n";
  if (an.asymptotic_shift) {
    out << "Delta = " << fixed(an.asymptotic_shift->delta_inf_mk, 4) << " +/- " << fixed(an.asymptotic_shift->sigma_mk, 4)
        << " mK (asymptotic shift)\n";
  }
  if (an.detection) {
    out << "mean difference = " << fixed(an.detection->mean_difference_mk, 4) << " +/- "
        << fixed(an.detection->sigma_mk, 4) << " mK, z = " << fixed(an.detection->z, 2)
        << (an.detection->capped ? " (capped)" : "") << "\n";
  }

  const double failure_fraction = static_cast<double>(an.fit_failures) / static_cast<double>(ds.curves.size());
  if (failure_fraction > opt.max_failure_fraction) {
    err << "analyze: " << an.fit_failures << " of " << ds.curves.size() << " fits failed\n";
    return kFit;
  }
  return kOk;
}

// ---------------------------------------------------------------------------------------------------------

struct SensitivityCliOptions {
  int trials = 500;
  bool calibrate = false;
  double target = 0.1;
  double tolerance = 0.1;
  int calibration_trials = 200;
  unsigned threads = 0;
  std::optional<double> delta_inf;
};

json calibration_json(const CalibrationResult& c, double target, double tolerance, int trials) {
  return {{"sigma_r_ohm", c.sigma_r},
          {"achieved_delta_n_mK", c.achieved_delta_n_mk},
          {"target_delta_n_mK", target},
          {"tolerance", tolerance},
          {"trials", trials},
          {"iterations", c.iterations}};
}

int cmd_calibrate(const CommonOptions& common, const SensitivityCliOptions& opt, std::ostream& out,
                  std::ostream& err) {
  RunConfig cfg = resolve_config(common);
  if (opt.calibration_trials < 1) throw UsageError("calibrate: --trials must be >= 1");
  SensitivityOptions sopt;
  sopt.threads = opt.threads;
  sopt.analysis.h_v_gauss = cfg.model.h_v_gauss;
  CalibrationOptions copt;
  copt.trials = opt.calibration_trials;
  CalibrationResult res;
  try {
    res = calibrate_noise(cfg.model, cfg.instrument, cfg.plan, opt.target, opt.tolerance, copt, sopt);
  } catch (const CalibrationError& e) {
    err << "calibrate: " << e.what() << " (sigma bracket [" << e.sigma_lo() << ", " << e.sigma_hi()
        << "], delta_n [" << e.delta_n_lo() << ", " << e.delta_n_hi() << "] mK)\n";
    return kCalibration;
  }
  json j;
  j["format_version"] = std::string(kRunFormatVersion);
  j["calibration"] = calibration_json(res, opt.target, opt.tolerance, opt.calibration_trials);
  cfg.instrument.resistance_noise = res.sigma_r;
  j["config"] = to_json(cfg);
  write_file_atomic(fs::path(cfg.output_dir) / "calibration.json", dump_json(j));
  out << "resistance noise = " << fmt(res.sigma_r) << " ohm -> delta_n = " << fixed(res.achieved_delta_n_mk, 4)
      << " mK (" << res.iterations << " bisection steps)\n";
  return kOk;
}

int cmd_sensitivity(const CommonOptions& common, const SensitivityCliOptions& opt, std::ostream& out,
                    std::ostream& err) {
  if (opt.trials < 100) throw UsageError("sensitivity: --trials must be >= 100");
  RunConfig cfg = resolve_config(common);
  if (opt.delta_inf) {
    cfg.model.delta_inf_mk = *opt.delta_inf;
    cfg.validate();
  }
  SensitivityOptions sopt;
  sopt.threads = opt.threads;
  sopt.analysis.h_v_gauss = cfg.model.h_v_gauss;

  json j;
  j["format_version"] = std::string(kRunFormatVersion);
  j["casimir_term"] = kCasimirForm;
  if (opt.calibrate) {
    CalibrationOptions copt;
    copt.trials = opt.calibration_trials;
    try {
      const CalibrationResult res =
          calibrate_noise(cfg.model, cfg.instrument, cfg.plan, opt.target, opt.tolerance, copt, sopt);
      cfg.instrument.resistance_noise = res.sigma_r;
      j["calibration"] = calibration_json(res, opt.target, opt.tolerance, opt.calibration_trials);
    } catch (const CalibrationError& e) {
      err << "sensitivity: calibration failed: " << e.what() << "\n";
      return kCalibration;
    }
  }

  // Calibration uses substreams from 0; the study itself starts past them.
  sopt.trial_offset = 1'000'000;
  const SensitivityReport rep = run_sensitivity(cfg.model, cfg.instrument, cfg.plan, opt.trials, sopt);
  const ContrastStudy contrast = derivative_contrast_study(cfg.model, cfg.instrument, cfg.plan, opt.trials, sopt);

  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["report"] = {{"delta_n_mK", rep.delta_n_mk},
                 {"trials", rep.trials},
                 {"failed_trials", rep.failed_trials},
                 {"valid", rep.valid},
                 {"detection_z", rep.detection_z},
                 {"detection_z_std", rep.detection_z_std},
                 {"detection_threshold", sopt.detection_threshold},
                 {"detection_rate", rep.detection_rate},
                 {"z_capped", rep.z_capped},
                 {"mean_difference_mK", rep.mean_difference_mk},
                 {"mean_difference_sigma_mK", rep.mean_difference_sigma_mk},
                 {"derivative_contrast", rep.derivative_contrast},
                 {"derivative_contrast_sigma", rep.derivative_contrast_sigma},
                 {"contrast_field_gauss", rep.contrast_field_gauss},
                 {"calibrated_sigma_r_ohm", rep.calibrated_sigma_r}};
  j["contrast"] = {{"model_contrast_at_h_v", contrast.model_contrast_at_h_v},
                   {"model_contrast_ok", contrast.model_contrast_ok},
                   {"failed_trials", contrast.failed_trials}};
  const fs::path dir = cfg.output_dir;
  write_file_atomic(dir / "sensitivity.json", dump_json(j));

  std::string csv = "field_gauss,model_contrast,mean_contrast,sigma_contrast\n";
  for (std::size_t i = 0; i < contrast.fields_gauss.size(); ++i) {
    csv += fmt(contrast.fields_gauss[i]) + ',' + fmt(contrast.model_contrast[i]) + ',' + fmt(contrast.mean_contrast[i]) +
           ',' + fmt(contrast.sigma_contrast[i]) + '\n';
  }
  write_file_atomic(dir / "contrast.csv", csv);

  out << "delta_n = " << fixed(rep.delta_n_mk, 4) << " mK over " << rep.trials << " trials ("
      << rep.failed_trials << " failed" << (rep.valid ? "" : ", INVALID") << ")\n"
      << "detection z = " << fixed(rep.detection_z, 2) << (rep.z_capped ? " (capped)" : "")
      << ", rate(z >= 3) = " << fixed(rep.detection_rate, 3) << "\n"
      << "derivative contrast at " << fixed(rep.contrast_field_gauss, 1) << " G = " << fixed(rep.derivative_contrast, 3)
      << " +/- " << fixed(rep.derivative_contrast_sigma, 3) << " (model " << fixed(contrast.model_contrast_at_h_v, 3)
      << " at H_V)\n"
      << "runtime " << fixed(rep.runtime_s, 2) << " s\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Film and Casimir-cavity critical-field simulator and sensitivity toolkit", "casimirtc"};
  app.require_subcommand(1);

  CommonOptions common;
  ModelCurveOptions mc;
  AnalyzeOptions an;
  SensitivityCliOptions sens;

  CLI::App* model_curve = app.add_subcommand("model-curve", "tabulate film and cavity depressions versus field");
  add_common(model_curve, common, false);
  model_curve->add_option("--h-min", mc.h_min, "first field [G]");
  model_curve->add_option("--h-max", mc.h_max, "last field [G]");
  model_curve->add_option("--step", mc.step, "field step [G]");

  CLI::App* simulate = app.add_subcommand("simulate", "synthesize the paired R(T) dataset");
  add_common(simulate, common);

  CLI::App* analyze = app.add_subcommand("analyze", "fit transitions and build delta, difference and derivative curves");
  analyze->add_option("manifest", an.manifest, "dataset manifest.json")->required();
  analyze->add_option("--out", an.out_dir, "output directory (default: manifest directory)");
  analyze->add_option("--window", an.window, "derivative regression window (odd)");
  analyze->add_option("--h-v", an.h_v, "crossover field for the asymptotic shift [G]");
  analyze->add_option("--max-failure-fraction", an.max_failure_fraction, "tolerated fraction of failed fits");

  CLI::App* sensitivity = app.add_subcommand("sensitivity", "Monte Carlo sensitivity study");
  add_common(sensitivity, common);
  sensitivity->add_option("--trials", sens.trials, "Monte Carlo trials (>= 100)");
  sensitivity->add_flag("--calibrate", sens.calibrate, "calibrate resistance noise to --target first");
  sensitivity->add_option("--target", sens.target, "target delta_n [mK]");
  sensitivity->add_option("--tolerance", sens.tolerance, "relative calibration tolerance");
  sensitivity->add_option("--calibration-trials", sens.calibration_trials, "trials per calibration step");
  sensitivity->add_option("--threads", sens.threads, "worker threads (0 = all cores)");
  sensitivity->add_option("--delta-inf", sens.delta_inf, "override the asymptotic shift [mK]");

  CLI::App* calibrate = app.add_subcommand("calibrate", "find the resistance noise reproducing a target delta_n");
  add_common(calibrate, common);
  calibrate->add_option("--target", sens.target, "target delta_n [mK]");
  calibrate->add_option("--tolerance", sens.tolerance, "relative tolerance");
  calibrate->add_option("--trials", sens.calibration_trials, "trials per bisection step");
  calibrate->add_option("--threads", sens.threads, "worker threads (0 = all cores)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*model_curve) return cmd_model_curve(common, mc, out);
    if (*simulate) return cmd_simulate(common, out);
    if (*analyze) return cmd_analyze(an, out, err);
    if (*sensitivity) return cmd_sensitivity(common, sens, out, err);
    if (*calibrate) return cmd_calibrate(common, sens, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << " (bracket [" << e.lo() << ", " << e.hi() << "], " << e.iterations()
        << " iterations)\n";
    return kSolver;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << "\n";
    return kFit;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kCalibration;
  }
  return kUsage;
}

}  // namespace casimirtc::cli
