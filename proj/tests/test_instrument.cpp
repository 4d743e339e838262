#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "casimirtc/errors.hpp"
#include "casimirtc/instrument.hpp"
#include "oracles.hpp"

using namespace casimirtc;

TEST_CASE("erf scale constant") {
  CHECK(kErfTenNinety == doctest::Approx(casimirtc::testing::erf_ten_ninety()).epsilon(1e-15));
  CHECK(std::erf(kErfTenNinety) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("config invariants") {
  InstrumentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.current_resolution = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.resistance_noise = -0.1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.transition_width_mk = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);

  const InstrumentConfig quiet = InstrumentConfig{}.noiseless();
  CHECK(quiet.resistance_noise == 0.0);
  CHECK(quiet.temperature_jitter_mk == 0.0);

  SampleGeometry g;
  CHECK_NOTHROW(g.validate());
  g.back_layer_thickness_nm = 0.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  g.kind = SampleKind::film;
  CHECK_NOTHROW(g.validate());
  g.width_um = g.length_um = 100.0;
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("coil field") {
  const InstrumentConfig cfg;
  CHECK(coil_field(cfg, 10.0) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(coil_field(cfg, 0.0) == 0.0);
  CHECK(coil_field(cfg, 16.667) == doctest::Approx(50.0).epsilon(1e-3));
  CHECK_THROWS_AS(coil_field(cfg, -1.0), DomainError);
  CHECK(realized_field(cfg, 150.0) == doctest::Approx(150.0).epsilon(1e-3));
}

TEST_CASE("property: quantization bound") {
  const InstrumentConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_i(-3.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double current = std::pow(10.0, log_i(rng));
    const double read = coil_field(cfg, current) / cfg.coil_constant;
    CHECK(std::abs(read - current) / current <= cfg.current_resolution);
  }
}

TEST_CASE("transition shape") {
  const InstrumentConfig cfg;
  const double t_star = 1.4996;
  const double w = cfg.transition_width_mk * 1e-3;
  CHECK(transition_resistance(cfg, t_star, t_star) == 5.0);
  CHECK(transition_resistance(cfg, t_star - 5 * w, t_star) < 1e-3 * cfg.normal_resistance);
  const double above = transition_resistance(cfg, t_star + 0.6 * w, t_star);
  CHECK(above >= 0.9 * cfg.normal_resistance);
  CHECK(above <= cfg.normal_resistance);
  CHECK(transition_resistance(cfg, t_star - 0.5 * w, t_star) == doctest::Approx(0.1 * cfg.normal_resistance).epsilon(1e-12));
  CHECK(transition_resistance(cfg, t_star + 0.5 * w, t_star) == doctest::Approx(0.9 * cfg.normal_resistance).epsilon(1e-12));

  double prev = -1.0;
  for (int i = 0; i < 500; ++i) {
    const double r = transition_resistance(cfg, t_star - 0.2 + 0.4 * i / 499.0, t_star);
    CHECK(r >= prev);
    prev = r;
  }
  CHECK_THROWS_AS(transition_resistance(cfg, 0.0, t_star), DomainError);
}

TEST_CASE("measurement") {
  InstrumentConfig cfg;
  const double t_star = 1.5;

  SUBCASE("noiseless limit") {
    const InstrumentConfig quiet = cfg.noiseless();
    NoiseStream noise(quiet.seed, 1);
    CHECK(measure_resistance(quiet, t_star, t_star, noise).resistance == 5.0);
    for (double t = 1.3; t < 1.7; t += 0.013) {
      CHECK(measure_resistance(quiet, t, t_star, noise).resistance == transition_resistance(quiet, t, t_star));
    }
  }

  SUBCASE("same seed and index reproduce bit-identical values") {
    cfg.temperature_jitter_mk = 0.5;
    NoiseStream a(cfg.seed, NoiseStream::key(0, 3, SampleKind::cavity, 0));
    NoiseStream b(cfg.seed, NoiseStream::key(0, 3, SampleKind::cavity, 0));
    NoiseStream other(cfg.seed, NoiseStream::key(0, 3, SampleKind::film, 0));
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const double ra = measure_resistance(cfg, 1.5, t_star, a).resistance;
      const double rb = measure_resistance(cfg, 1.5, t_star, b).resistance;
      CHECK(ra == rb);
      differs = differs || ra != measure_resistance(cfg, 1.5, t_star, other).resistance;
    }
    CHECK(differs);
    CHECK(a.draws() == 200);
  }

  SUBCASE("resistance noise level") {
    cfg.resistance_noise = 0.05;
    NoiseStream noise(cfg.seed, 42);
    const int n = 10000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = measure_resistance(cfg, 2.0, t_star, noise).resistance - cfg.normal_resistance;
      s += r;
      ss += r * r;
    }
    const double sd = std::sqrt((ss - s * s / n) / (n - 1));
    CHECK(sd == doctest::Approx(0.05).epsilon(0.03));
  }

  SUBCASE("setpoints below base temperature are clamped and flagged") {
    NoiseStream noise(cfg.seed, 7);
    const Measurement m = measure_resistance(cfg, 0.25, 0.4, noise);
    CHECK(m.clamped);
    CHECK(m.temperature_k == cfg.base_temperature_k);
    const Measurement ok = measure_resistance(cfg, 0.35, 0.4, noise);
    CHECK_FALSE(ok.clamped);
  }
}

TEST_CASE("substream keys are distinct") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t t = 0; t < 20; ++t)
    for (std::uint64_t f = 0; f < 10; ++f)
      for (SampleKind k : {SampleKind::film, SampleKind::cavity})
        for (std::uint64_t r = 0; r < 4; ++r) keys.insert(NoiseStream::key(t, f, k, r));
  CHECK(keys.size() == 20u * 10u * 2u * 4u);
}
