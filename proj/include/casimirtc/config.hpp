#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "casimirtc/instrument.hpp"
#include "casimirtc/model.hpp"
#include "casimirtc/protocol.hpp"

namespace casimirtc {

/// Everything a run needs. `seed` is authoritative and mirrored into instrument.seed.
struct RunConfig {
  ModelParams model = calibrate_defaults();
  InstrumentConfig instrument;
  SweepPlan plan;
  std::uint64_t seed = 2007;
  std::string output_dir = "out";

  void validate() const;
};

/// Calibrated model, default instrument, and a plan over the reference fields [h_v, 5 h_v].
RunConfig default_run_config();

/// Strict parse: unknown keys and wrong types raise InputError. Missing keys keep their defaults; a plan
/// without t_center_K/t_span_K is centred by plan_sweep.
RunConfig run_config_from_json(const nlohmann::json& j);
/// output_dir is left out so that written artifacts do not depend on where they were written.
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);

/// Replaces the plan fields and re-centres the temperature grid.
void set_fields(RunConfig& cfg, std::vector<double> fields_gauss);

}  // namespace casimirtc
