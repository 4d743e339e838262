// Acceptance gate. One line per criterion; exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "casimirtc/analysis.hpp"
#include "casimirtc/config.hpp"
#include "casimirtc/run_files.hpp"
#include "casimirtc/sensitivity.hpp"
#include "oracles.hpp"

using namespace casimirtc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ModelParams kParams = calibrate_defaults();

Outcome model_anchors() {
  const double film = film_delta(kParams, 150.0);
  const double cav = cavity_delta(kParams, 150.0);
  double lo = 1e9, hi = -1e9;
  for (double h = 250.0; h <= 500.0; h += 0.5) {
    const double d = delta_difference(kParams, h);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const bool ok = std::abs(film - 0.6) <= 1e-12 && std::abs(cav - 0.4) <= 0.04 && lo >= 0.19 && hi <= 0.21;
  return {ok, fmt("film(150)=%.6f cavity(150)=%.6f difference on [250,500] in [%.5f, %.5f] mK", film, cav, lo, hi)};
}

Outcome derivative_structure() {
  std::vector<double> x, y;
  for (double h = 0.0; h <= 250.0; h += 2.5) {
    x.push_back(h);
    y.push_back(delta_derivative(kParams, h, SampleKind::film).value);
  }
  const double r2_film = linear_fit_r2(x, y);

  x.clear();
  y.clear();
  for (double h = 0.5; h <= 0.3 * kParams.h_v_gauss + 1e-12; h += 0.5) {
    x.push_back(h);
    y.push_back(delta_derivative(kParams, h, SampleKind::cavity).value);
  }
  const double r2_cav = linear_fit_r2(x, y);

  double worst = 0.0;
  for (double h = 5.0 * kParams.h_v_gauss; h <= 20.0 * kParams.h_v_gauss; h += 1.0) {
    const double f = delta_derivative(kParams, h, SampleKind::film).value;
    const double c = delta_derivative(kParams, h, SampleKind::cavity).value;
    worst = std::max(worst, std::abs(f - c) / f);
  }
  const bool ok = r2_film > 0.9999 && r2_cav > 0.999 && worst <= 0.02;
  return {ok, fmt("film R2=%.8f, cavity R2(H<=0.3H_V)=%.6f, max rel. gap for H>=5H_V %.4f", r2_film, r2_cav, worst)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20070);
  std::uniform_real_distribution<double> field(0.1, 1000.0);
  double worst_root = 0.0, worst_inverse = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double h = field(rng);
    const double fast = cavity_delta(kParams, h);
    const double slow = casimirtc::testing::brute_force_cavity_delta(kParams, h, 1e-4);
    worst_root = std::max(worst_root, std::abs(fast - slow));
    for (SampleKind kind : {SampleKind::film, SampleKind::cavity}) {
      const double back = critical_field(kParams, delta_of(kParams, h, kind), kind);
      worst_inverse = std::max(worst_inverse, std::abs(back - h) / h);
    }
  }
  const bool ok = worst_root <= 1e-9 && worst_inverse <= 1e-9;
  return {ok, fmt("max |cavity - brute force| = %.2e mK, max critical_field round trip = %.2e", worst_root,
                  worst_inverse)};
}

Outcome noiseless_identity() {
  RunConfig rc = default_run_config();
  rc.instrument = rc.instrument.noiseless();
  const Dataset ds = run_paired_experiment(rc.model, rc.instrument, rc.plan);
  const fs::path dir = fs::temp_directory_path() / "casimirtc_acceptance" / "noiseless";
  fs::remove_all(dir);
  const LoadedDataset loaded = read_dataset(write_dataset(dir, ds, to_json(rc)));
  const DatasetAnalysis an = analyze_dataset(loaded.curves);
  if (!an.cavity || !an.difference || an.film.points.size() != rc.plan.fields_gauss.size()) {
    return {false, "analysis did not produce both curves and the difference"};
  }
  double worst_f = 0, worst_c = 0, worst_d = 0;
  for (std::size_t i = 0; i < an.film.points.size(); ++i) {
    const double h = an.film.points[i].field_gauss;
    worst_f = std::max(worst_f, std::abs(an.film.points[i].delta_mk - film_delta(rc.model, h)));
    worst_c = std::max(worst_c, std::abs(an.cavity->points[i].delta_mk - cavity_delta(rc.model, h)));
    worst_d = std::max(worst_d, std::abs((*an.difference)[i].delta_mk - delta_difference(rc.model, h)));
  }
  const double tol = 1e-3;  // 1 uK in mK
  const bool ok = an.fit_failures == 0 && worst_f <= tol && worst_c <= tol && worst_d <= tol;
  return {ok, fmt("%zu fields, max error film %.2e, cavity %.2e, difference %.2e mK", an.film.points.size(), worst_f,
                  worst_c, worst_d)};
}

Outcome sensitivity_reproduction() {
  const RunConfig rc = default_run_config();
  SensitivityOptions opt;
  const CalibrationResult cal = calibrate_noise(rc.model, rc.instrument, rc.plan, 0.1, 0.10, {}, opt);
  InstrumentConfig cfg = rc.instrument;
  cfg.resistance_noise = cal.sigma_r;

  opt.trial_offset = 1'000'000;
  const SensitivityReport rep = run_sensitivity(rc.model, cfg, rc.plan, 500, opt);
  ModelParams null = rc.model;
  null.delta_inf_mk = 0.0;
  const SensitivityReport nul = run_sensitivity(null, cfg, rc.plan, 500, opt);

  const bool ok = std::abs(rep.delta_n_mk - 0.1) <= 0.01 && rep.valid && nul.valid && rep.detection_z >= 3.0 &&
                  nul.detection_rate <= 0.01;
  return {ok, fmt("sigma_R=%.5f ohm, delta_n=%.4f mK, mean z=%.3f (rate %.3f), null false rate %.4f, failed %d/%d",
                  cal.sigma_r, rep.delta_n_mk, rep.detection_z, rep.detection_rate, nul.detection_rate,
                  rep.failed_trials, nul.failed_trials)};
}

Outcome derivative_contrast() {
  const double at_hv = model_derivative_contrast(kParams, kParams.h_v_gauss);
  const double at_5hv = model_derivative_contrast(kParams, 5.0 * kParams.h_v_gauss);

  // Same statement through the noiseless pipeline with the windowed derivative.
  const InstrumentConfig quiet = InstrumentConfig{}.noiseless();
  const SweepPlan plan = plan_sweep(kParams, quiet, reference_fields(kParams));
  const ContrastStudy s = derivative_contrast_study(kParams, quiet, plan, 1);
  const double pipe_hv = s.mean_contrast.front(), pipe_5hv = s.mean_contrast.back();

  const bool ok = at_hv >= 0.20 && at_5hv <= 0.05 && pipe_hv >= 0.20 && pipe_5hv <= 0.05;
  return {ok, fmt("model %.4f at H_V, %.4f at 5H_V; noiseless pipeline %.4f, %.4f", at_hv, at_5hv, pipe_hv, pipe_5hv)};
}

#ifdef CASIMIRTC_CLI_PATH
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = read_text_file(e.path());
  }
  return files;
}
#endif

Outcome determinism() {
#ifndef CASIMIRTC_CLI_PATH
  return {false, "command-line tool not built"};
#else
  const fs::path root = fs::temp_directory_path() / "casimirtc_acceptance" / "determinism";
  fs::remove_all(root);
  const std::string exe = CASIMIRTC_CLI_PATH;
  std::map<std::string, std::string> first;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    const std::string o = " --out " + d.string() + " > " + (root / (std::string(run) + ".log")).string() + " 2>&1";
    fs::create_directories(d);
    const std::vector<std::string> cmds = {
        exe + " model-curve --seed 5" + o,
        exe + " simulate --seed 5" + o,
        exe + " analyze " + (d / "manifest.json").string() + " > /dev/null 2>&1",
        exe + " sensitivity --seed 5 --trials 100" + o,
        exe + " calibrate --seed 5 --trials 20" + o,
    };
    for (const std::string& c : cmds) {
      if (std::system(c.c_str()) != 0) return {false, "command failed: " + c};
    }
    const auto snap = snapshot(d);
    if (first.empty()) {
      first = snap;
      continue;
    }
    if (snap != first) {
      for (const auto& [name, bytes] : first) {
        auto it = snap.find(name);
        if (it == snap.end() || it->second != bytes) return {false, "outputs differ in " + name};
      }
      return {false, "second run produced extra files"};
    }
  }
  return {true, fmt("%zu output files byte-identical across two runs of model-curve, simulate, analyze, "
                    "sensitivity, calibrate", first.size())};
#endif
}

Outcome statistical_honesty() {
  const InstrumentConfig cfg;
  double worst_ratio = 0.0;
  std::string fits;
  for (auto [h, kind] : {std::pair{50.0, SampleKind::film}, std::pair{150.0, SampleKind::cavity}}) {
    const SweepPlan plan = plan_sweep(kParams, cfg, {h});
    const int seeds = 500;
    double s = 0, ss = 0, sig = 0;
    for (int k = 0; k < seeds; ++k) {
      const Acquisition a = acquire_curve(kParams, cfg, plan, {static_cast<std::uint64_t>(k), 0, kind, 0});
      const FitResult f = fit_transition(a.curve);
      const double e = f.t_star_k - a.truth.t_star_k;
      s += e;
      ss += e * e;
      sig += f.sigma_t_star_k;
    }
    const double sd = std::sqrt((ss - s * s / seeds) / (seeds - 1));
    const double ratio = sd / (sig / seeds);
    worst_ratio = std::max(worst_ratio, std::abs(ratio - 1.0));
    fits += fmt("%s@%gG scatter/reported=%.3f; ", std::string(to_string(kind)).c_str(), h, ratio);
  }

  SweepPlan plan = plan_sweep(kParams, cfg, reference_fields(kParams));
  std::vector<double> dn;
  for (int k : {1, 4, 16}) {
    plan.repetitions = k;
    dn.push_back(measure_delta_n(kParams, cfg, plan, 100));
  }
  const double r4 = dn[0] / dn[1] / 2.0, r16 = dn[0] / dn[2] / 4.0;
  const bool ok = worst_ratio <= 0.25 && std::abs(r4 - 1.0) <= 0.20 && std::abs(r16 - 1.0) <= 0.20;
  return {ok, fits + fmt("delta_n(k)=%.4f/%.4f/%.4f mK, ratio to 1/sqrt(k): %.3f (k=4), %.3f (k=16)", dn[0], dn[1],
                         dn[2], r4, r16)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // <= 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "model anchors", 1.0, model_anchors},
      {2, "derivative structure", 1.0, derivative_structure},
      {3, "oracle equivalence", 5.0, oracle_equivalence},
      {4, "noiseless end-to-end identity", 10.0, noiseless_identity},
      {5, "sensitivity reproduction", 60.0, sensitivity_reproduction},
      {6, "derivative contrast", 1.0, derivative_contrast},
      {7, "determinism", 0.0, determinism},
      {8, "statistical honesty", 0.0, statistical_honesty},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += fmt(" (runtime budget %.0f s exceeded)", c.budget_s);
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s  criterion %d  %-30s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
