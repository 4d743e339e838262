#include "casimirtc/config.hpp"

#include <set>

#include "casimirtc/errors.hpp"
#include "casimirtc/run_files.hpp"

namespace casimirtc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw InputError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw InputError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw InputError("");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw InputError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    model.validate();
    instrument.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  plan.validate();
  if (instrument.seed != seed) throw InputError("instrument seed does not match run seed");
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.instrument.seed = cfg.seed;
  cfg.plan = plan_sweep(cfg.model, cfg.instrument, reference_fields(cfg.model));
  return cfg;
}

void set_fields(RunConfig& cfg, std::vector<double> fields_gauss) {
  const SweepPlan old = cfg.plan;
  cfg.plan = plan_sweep(cfg.model, cfg.instrument, std::move(fields_gauss));
  cfg.plan.n_points = old.n_points;
  cfg.plan.repetitions = old.repetitions;
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"format_version", "model", "instrument", "plan", "seed", "output_dir"}, "config");
  RunConfig cfg = default_run_config();

  if (auto it = j.find("format_version"); it != j.end()) {
    if (!it->is_string() || it->get<std::string>() != kRunFormatVersion) {
      throw InputError("config: unsupported format_version");
    }
  }
  if (auto it = j.find("model"); it != j.end()) {
    const json& m = *it;
    reject_unknown(m, {"t_c_K", "alpha_mK_per_G2", "delta_inf_mK", "h_v_G", "cond_scale"}, "config.model");
    read(m, "t_c_K", cfg.model.t_c_k, "config.model");
    read(m, "alpha_mK_per_G2", cfg.model.alpha, "config.model");
    read(m, "delta_inf_mK", cfg.model.delta_inf_mk, "config.model");
    read(m, "h_v_G", cfg.model.h_v_gauss, "config.model");
    read(m, "cond_scale", cfg.model.cond_scale, "config.model");
  }
  if (auto it = j.find("instrument"); it != j.end()) {
    const json& m = *it;
    reject_unknown(m,
                   {"coil_constant_G_per_mA", "current_resolution", "base_temperature_K", "normal_resistance_ohm",
                    "transition_width_mK", "resistance_noise_ohm", "temperature_jitter_mK"},
                   "config.instrument");
    read(m, "coil_constant_G_per_mA", cfg.instrument.coil_constant, "config.instrument");
    read(m, "current_resolution", cfg.instrument.current_resolution, "config.instrument");
    read(m, "base_temperature_K", cfg.instrument.base_temperature_k, "config.instrument");
    read(m, "normal_resistance_ohm", cfg.instrument.normal_resistance, "config.instrument");
    read(m, "transition_width_mK", cfg.instrument.transition_width_mk, "config.instrument");
    read(m, "resistance_noise_ohm", cfg.instrument.resistance_noise, "config.instrument");
    read(m, "temperature_jitter_mK", cfg.instrument.temperature_jitter_mk, "config.instrument");
  }
  read(j, "seed", cfg.seed, "config");
  cfg.instrument.seed = cfg.seed;
  read(j, "output_dir", cfg.output_dir, "config");

  std::vector<double> fields = reference_fields(cfg.model);
  int n_points = 200, repetitions = 1;
  std::optional<double> center, span;
  if (auto it = j.find("plan"); it != j.end()) {
    const json& m = *it;
    reject_unknown(m, {"fields_G", "n_points", "repetitions", "t_center_K", "t_span_K"}, "config.plan");
    if (auto f = m.find("fields_G"); f != m.end()) {
      if (!f->is_array()) throw InputError("config.plan: fields_G must be an array");
      fields.clear();
      for (const json& v : *f) {
        if (!v.is_number()) throw InputError("config.plan: fields_G must hold numbers");
        fields.push_back(v.get<double>());
      }
    }
    read(m, "n_points", n_points, "config.plan");
    read(m, "repetitions", repetitions, "config.plan");
    double value = 0.0;
    if (m.contains("t_center_K")) {
      read(m, "t_center_K", value, "config.plan");
      center = value;
    }
    if (m.contains("t_span_K")) {
      read(m, "t_span_K", value, "config.plan");
      span = value;
    }
  }
  if (fields.empty()) throw InputError("config.plan: fields_G is empty");
  cfg.plan = plan_sweep(cfg.model, cfg.instrument, fields);
  cfg.plan.n_points = n_points;
  cfg.plan.repetitions = repetitions;
  if (center) cfg.plan.t_center_k = *center;
  if (span) cfg.plan.t_span_k = *span;
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["format_version"] = std::string(kRunFormatVersion);
  j["model"] = {{"t_c_K", cfg.model.t_c_k},
                {"alpha_mK_per_G2", cfg.model.alpha},
                {"delta_inf_mK", cfg.model.delta_inf_mk},
                {"h_v_G", cfg.model.h_v_gauss},
                {"cond_scale", cfg.model.cond_scale}};
  j["instrument"] = {{"coil_constant_G_per_mA", cfg.instrument.coil_constant},
                     {"current_resolution", cfg.instrument.current_resolution},
                     {"base_temperature_K", cfg.instrument.base_temperature_k},
                     {"normal_resistance_ohm", cfg.instrument.normal_resistance},
                     {"transition_width_mK", cfg.instrument.transition_width_mk},
                     {"resistance_noise_ohm", cfg.instrument.resistance_noise},
                     {"temperature_jitter_mK", cfg.instrument.temperature_jitter_mk}};
  j["plan"] = {{"fields_G", cfg.plan.fields_gauss},
               {"n_points", cfg.plan.n_points},
               {"repetitions", cfg.plan.repetitions},
               {"t_center_K", cfg.plan.t_center_k},
               {"t_span_K", cfg.plan.t_span_k}};
  j["seed"] = cfg.seed;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace casimirtc
