#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "casimirtc/errors.hpp"
#include "casimirtc/protocol.hpp"

using namespace casimirtc;

namespace {

// Linear interpolation of the half-R_n crossing.
double half_crossing(const TransitionCurve& c, double r_n) {
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c.resistance_ohm[i - 1] < 0.5 * r_n && c.resistance_ohm[i] >= 0.5 * r_n) {
      const double f = (0.5 * r_n - c.resistance_ohm[i - 1]) / (c.resistance_ohm[i] - c.resistance_ohm[i - 1]);
      return c.temperature_k[i - 1] + f * (c.temperature_k[i] - c.temperature_k[i - 1]);
    }
  }
  return NAN;
}

}  // namespace

TEST_CASE("plan_sweep") {
  const ModelParams p = calibrate_defaults();
  const InstrumentConfig cfg;

  const SweepPlan one = plan_sweep(p, cfg, {150.0});
  CHECK(one.t_span_k == doctest::Approx(0.4));
  CHECK(one.t_center_k == doctest::Approx(1.5 - 0.3e-3));
  CHECK(one.n_points == 200);
  CHECK(one.repetitions == 1);
  const auto grid = one.temperature_grid();
  CHECK(grid.size() == 200);
  CHECK(grid.front() == doctest::Approx(one.t_center_k - 0.2));
  CHECK(grid.back() == doctest::Approx(one.t_center_k + 0.2));

  CHECK(plan_sweep(p, cfg, {0.0}).t_center_k == p.t_c_k);

  CHECK_THROWS_AS(plan_sweep(p, cfg, {}), InputError);
  CHECK_THROWS_AS(plan_sweep(p, cfg, {50.0, 50.0}), InputError);
  CHECK_THROWS_AS(plan_sweep(p, cfg, {100.0, 50.0}), InputError);
  CHECK_THROWS_AS(plan_sweep(p, cfg, {-1.0, 50.0}), InputError);
  SweepPlan bad = one;
  bad.n_points = 19;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("plan covers every transition") {
  const ModelParams p = calibrate_defaults();
  const InstrumentConfig cfg;
  const SweepPlan plan = plan_sweep(p, cfg, {50.0, 100.0, 150.0});
  const auto grid = plan.temperature_grid();
  for (double h : plan.fields_gauss) {
    for (SampleKind kind : {SampleKind::film, SampleKind::cavity}) {
      const double t_star = p.t_c_k - delta_of(p, h, kind) * 1e-3;
      CHECK(t_star > grid.front() + 0.1 * plan.t_span_k);
      CHECK(t_star < grid.back() - 0.1 * plan.t_span_k);
    }
  }
}

TEST_CASE("reference fields") {
  const auto f = reference_fields(calibrate_defaults());
  REQUIRE(f.size() == 10);
  CHECK(f.front() == 50.0);
  CHECK(f.back() == 250.0);
}

TEST_CASE("acquire_curve") {
  const ModelParams p = calibrate_defaults();
  const InstrumentConfig quiet = InstrumentConfig{}.noiseless();

  SUBCASE("zero field film crosses half R_n at t_c") {
    const SweepPlan plan = plan_sweep(p, quiet, {0.0});
    const Acquisition a = acquire_curve(p, quiet, plan, {0, 0, SampleKind::film, 0});
    CHECK(a.curve.size() == 200);
    const double step = plan.t_span_k / 199.0;
    CHECK(std::abs(half_crossing(a.curve, quiet.normal_resistance) - p.t_c_k) < step);
    CHECK(a.truth.t_star_k == p.t_c_k);
  }

  SUBCASE("cavity at 150 G") {
    const SweepPlan plan = plan_sweep(p, quiet, {150.0});
    const Acquisition a = acquire_curve(p, quiet, plan, {0, 0, SampleKind::cavity, 0});
    const double crossing_mk = (p.t_c_k - half_crossing(a.curve, quiet.normal_resistance)) * 1e3;
    // Linear interpolation over a 2 mK step on the erf is accurate to a few microkelvin here.
    CHECK(crossing_mk == doctest::Approx(a.truth.delta_mk).epsilon(0.05));
    CHECK(crossing_mk == doctest::Approx(0.4).epsilon(0.10));
    CHECK(a.curve.midpoint_in_core);
  }

  SUBCASE("same seed gives identical curves") {
    const InstrumentConfig cfg;
    const SweepPlan plan = plan_sweep(p, cfg, {100.0});
    const Acquisition a = acquire_curve(p, cfg, plan, {0, 0, SampleKind::film, 0});
    const Acquisition b = acquire_curve(p, cfg, plan, {0, 0, SampleKind::film, 0});
    CHECK(a.curve.resistance_ohm == b.curve.resistance_ohm);
    CHECK(a.curve.temperature_k == b.curve.temperature_k);
    const Acquisition c = acquire_curve(p, cfg, plan, {1, 0, SampleKind::film, 0});
    CHECK(a.curve.resistance_ohm != c.curve.resistance_ohm);
  }

  SUBCASE("index outside the plan") {
    const SweepPlan plan = plan_sweep(p, quiet, {100.0});
    CHECK_THROWS_AS(acquire_curve(p, quiet, plan, {0, 1, SampleKind::film, 0}), InputError);
  }
}

TEST_CASE("base temperature floor") {
  ModelParams p = calibrate_defaults();
  p.t_c_k = 0.45;
  const InstrumentConfig cfg;
  const SweepPlan plan = plan_sweep(p, cfg, {100.0});
  const Acquisition a = acquire_curve(p, cfg, plan, {0, 0, SampleKind::film, 0});
  int clamped = 0;
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve.temperature_k[i] >= 0.300);
    if (i > 0) CHECK(a.curve.temperature_k[i] > a.curve.temperature_k[i - 1]);
    clamped += a.curve.clamped[i];
  }
  CHECK(clamped == 1);
  CHECK(a.curve.size() < 200);
}

TEST_CASE("run_paired_experiment") {
  const ModelParams p = calibrate_defaults();
  const InstrumentConfig cfg;
  SweepPlan plan = plan_sweep(p, cfg, {50.0, 100.0, 150.0, 200.0, 250.0});

  const Dataset ds = run_paired_experiment(p, cfg, plan);
  REQUIRE(ds.curves.size() == 10);
  REQUIRE(ds.truth.size() == 10);
  for (std::size_t i = 0; i < ds.curves.size(); i += 2) {
    CHECK(ds.curves[i].kind == SampleKind::film);
    CHECK(ds.curves[i + 1].kind == SampleKind::cavity);
    // Paired samples see the same field, bit for bit.
    CHECK(ds.curves[i].field_gauss == ds.curves[i + 1].field_gauss);
    CHECK(ds.curves[i].midpoint_in_core);
  }

  plan.repetitions = 3;
  const Dataset rep = run_paired_experiment(p, cfg, plan);
  CHECK(rep.curves.size() == 30);
  std::set<std::string> paths;
  for (const auto& c : rep.curves) paths.insert(c.seed_path);
  CHECK(paths.size() == 30);

  SUBCASE("pure function of inputs") {
    const Dataset again = run_paired_experiment(p, cfg, plan);
    for (std::size_t i = 0; i < rep.curves.size(); ++i) {
      CHECK(again.curves[i].resistance_ohm == rep.curves[i].resistance_ohm);
    }
  }
}
