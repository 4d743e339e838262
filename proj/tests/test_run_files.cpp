#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "casimirtc/config.hpp"
#include "casimirtc/errors.hpp"
#include "casimirtc/run_files.hpp"

using namespace casimirtc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "casimirtc_test_run_files" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("format_double round trips every bit") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t bits = rng();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(same_bits(parse_double(format_double(v)), v));
  }
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min())) ==
        std::numeric_limits<double>::denorm_min());
  CHECK_THROWS_AS(parse_double("1.5x"), IoError);
  CHECK_THROWS_AS(parse_double(""), IoError);
}

TEST_CASE("property: curve csv round trip is bit exact") {
  const ModelParams p = calibrate_defaults();
  const InstrumentConfig cfg;
  const SweepPlan plan = plan_sweep(p, cfg, {50.0, 137.0, 250.0});
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const Dataset ds = run_paired_experiment(p, cfg, plan, trial);
    for (const TransitionCurve& c : ds.curves) {
      const TransitionCurve back = curve_from_csv(curve_to_csv(c));
      CHECK(same_bits(back.field_gauss, c.field_gauss));
      CHECK(back.kind == c.kind);
      CHECK(back.seed_path == c.seed_path);
      REQUIRE(back.size() == c.size());
      for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(same_bits(back.temperature_k[i], c.temperature_k[i]));
        CHECK(same_bits(back.resistance_ohm[i], c.resistance_ohm[i]));
      }
    }
  }
}

TEST_CASE("malformed curve files") {
  CHECK_THROWS_AS(curve_from_csv(""), IoError);
  CHECK_THROWS_AS(curve_from_csv("# field_gauss=1\n# kind=film\n1,2\n"), IoError);
  CHECK_THROWS_AS(curve_from_csv("# field_gauss=1\n# kind=dome\ntemperature_K,resistance_ohm\n"), IoError);
  CHECK_THROWS_AS(curve_from_csv("# field_gauss=1\n# kind=film\ntemperature_K,resistance_ohm\n1.0;2\n"), IoError);
  CHECK_THROWS_AS(curve_from_csv("# colour=red\n"), IoError);
}

TEST_CASE("dataset write and read") {
  const fs::path dir = scratch("dataset");
  RunConfig rc = default_run_config();
  set_fields(rc, {50.0, 100.0, 150.0});
  rc.plan.repetitions = 2;
  const Dataset ds = run_paired_experiment(rc.model, rc.instrument, rc.plan);
  const fs::path manifest = write_dataset(dir, ds, to_json(rc));
  CHECK(fs::exists(dir / "curves" / "f002_cavity_r01.csv"));

  const LoadedDataset back = read_dataset(manifest);
  REQUIRE(back.curves.size() == ds.curves.size());
  REQUIRE(back.ground_truth.size() == ds.truth.size());
  for (std::size_t i = 0; i < ds.curves.size(); ++i) {
    CHECK(back.curves[i].resistance_ohm == ds.curves[i].resistance_ohm);
    CHECK(back.curves[i].field_index == ds.curves[i].field_index);
    CHECK(back.curves[i].repetition == ds.curves[i].repetition);
    CHECK(back.ground_truth[i].delta_mk == ds.truth[i].delta_mk);
  }
  CHECK(run_config_from_json(back.config).plan.fields_gauss == rc.plan.fields_gauss);

  SUBCASE("writing twice gives identical bytes") {
    const std::string first = read_text_file(manifest);
    write_dataset(dir, ds, to_json(rc));
    CHECK(read_text_file(manifest) == first);
  }

  SUBCASE("missing curve file") {
    fs::remove(dir / "curves" / "f000_film_r00.csv");
    CHECK_THROWS_AS(read_dataset(manifest), IoError);
  }
}

TEST_CASE("manifest errors") {
  const fs::path dir = scratch("errors");
  CHECK_THROWS_AS(read_dataset(dir / "manifest.json"), IoError);

  write_file_atomic(dir / "manifest.json", "{ not json");
  CHECK_THROWS_AS(read_dataset(dir / "manifest.json"), IoError);

  write_file_atomic(dir / "manifest.json", R"({"format_version": "casimirtc-run/1", "curves": []})");
  CHECK_THROWS_AS(read_dataset(dir / "manifest.json"), IoError);

  write_file_atomic(dir / "manifest.json", R"({"format_version": "other/9", "curves": [{}]})");
  CHECK_THROWS_AS(read_dataset(dir / "manifest.json"), IoError);
}

TEST_CASE("run config json") {
  const RunConfig rc = default_run_config();
  const RunConfig back = run_config_from_json(to_json(rc));
  CHECK(back.model.alpha == rc.model.alpha);
  CHECK(back.instrument.resistance_noise == rc.instrument.resistance_noise);
  CHECK(back.plan.t_center_k == rc.plan.t_center_k);
  CHECK(back.seed == rc.seed);

  nlohmann::json j = to_json(rc);
  j["model"]["unknown_key"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j), InputError);

  j = to_json(rc);
  j["plan"]["fields_G"] = nlohmann::json::array({100.0, 50.0});
  CHECK_THROWS_AS(run_config_from_json(j), InputError);

  j = to_json(rc);
  j["instrument"]["resistance_noise_ohm"] = -1.0;
  CHECK_THROWS((void)run_config_from_json(j));
}
