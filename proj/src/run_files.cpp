#include "casimirtc/run_files.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "casimirtc/errors.hpp"

namespace casimirtc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "'");
  }
  return v;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string curve_to_csv(const TransitionCurve& curve) {
  std::string out;
  out.reserve(48 * curve.size() + 128);
  out += "# field_gauss=" + format_double(curve.field_gauss) + "\n";
  out += "# kind=" + std::string(to_string(curve.kind)) + "\n";
  out += "# seed_path=" + curve.seed_path + "\n";
  out += "temperature_K,resistance_ohm\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += format_double(curve.temperature_k[i]);
    out += ',';
    out += format_double(curve.resistance_ohm[i]);
    out += '\n';
  }
  return out;
}

TransitionCurve curve_from_csv(std::string_view text) {
  TransitionCurve curve;
  bool have_field = false, have_kind = false, have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;

    if (line.starts_with("# ")) {
      const std::string_view kv = line.substr(2);
      const std::size_t eq = kv.find('=');
      if (eq == std::string_view::npos) throw IoError("malformed header row");
      const std::string_view key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "field_gauss") {
        curve.field_gauss = parse_double(value);
        have_field = true;
      } else if (key == "kind") {
        try {
          curve.kind = sample_kind_from_string(value);
        } catch (const InputError& e) {
          throw IoError(e.what());
        }
        have_kind = true;
      } else if (key == "seed_path") {
        curve.seed_path = std::string(value);
      } else {
        throw IoError("unknown header key '" + std::string(key) + "'");
      }
      continue;
    }
    if (!have_header) {
      if (line != "temperature_K,resistance_ohm") throw IoError("missing column header");
      have_header = true;
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) throw IoError("malformed data row");
    curve.temperature_k.push_back(parse_double(line.substr(0, comma)));
    curve.resistance_ohm.push_back(parse_double(line.substr(comma + 1)));
  }
  if (!have_field || !have_kind || !have_header) throw IoError("run file is missing required header rows");
  curve.clamped.assign(curve.size(), 0);
  return curve;
}

std::string dump_json(const json& j) {
  return j.dump(2) + "\n";
}

fs::path write_dataset(const fs::path& dir, const Dataset& dataset, const json& config) {
  json curves = json::array();
  json truth = json::array();
  for (std::size_t i = 0; i < dataset.curves.size(); ++i) {
    const TransitionCurve& c = dataset.curves[i];
    char name[96];
    std::snprintf(name, sizeof name, "curves/f%03d_%s_r%02d.csv", c.field_index, c.kind == SampleKind::film ? "film" : "cavity",
                  c.repetition);
    write_file_atomic(dir / name, curve_to_csv(c));

    std::vector<std::size_t> clamped;
    for (std::size_t k = 0; k < c.clamped.size(); ++k) {
      if (c.clamped[k]) clamped.push_back(k);
    }
    curves.push_back({{"file", name},
                      {"field_gauss", c.field_gauss},
                      {"kind", std::string(to_string(c.kind))},
                      {"field_index", c.field_index},
                      {"repetition", c.repetition},
                      {"seed_path", c.seed_path},
                      {"midpoint_in_core", c.midpoint_in_core},
                      {"clamped_samples", clamped}});
    if (i < dataset.truth.size()) {
      truth.push_back({{"file", name},
                       {"t_star_K", dataset.truth[i].t_star_k},
                       {"delta_mK", dataset.truth[i].delta_mk}});
    }
  }
  json manifest;
  manifest["format_version"] = std::string(kRunFormatVersion);
  manifest["config"] = config;
  manifest["curves"] = curves;
  manifest["oracle"] = {{"ground_truth", truth}};
  const fs::path path = dir / "manifest.json";
  write_file_atomic(path, dump_json(manifest));
  return path;
}

LoadedDataset read_dataset(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw IoError("manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || manifest.value("format_version", std::string()) != kRunFormatVersion) {
    throw IoError("manifest has a missing or unsupported format_version");
  }
  const auto curves = manifest.find("curves");
  if (curves == manifest.end() || !curves->is_array() || curves->empty()) {
    throw IoError("manifest lists no curves");
  }

  LoadedDataset ds;
  ds.config = manifest.value("config", json::object());
  const fs::path base = manifest_path.parent_path();
  try {
    for (const json& e : *curves) {
      ManifestEntry entry;
      entry.file = e.at("file").get<std::string>();
      entry.field_gauss = e.at("field_gauss").get<double>();
      entry.kind = sample_kind_from_string(e.at("kind").get<std::string>());
      entry.field_index = e.at("field_index").get<int>();
      entry.repetition = e.at("repetition").get<int>();
      entry.seed_path = e.value("seed_path", std::string());
      entry.midpoint_in_core = e.value("midpoint_in_core", true);
      entry.clamped_samples = e.value("clamped_samples", std::vector<std::size_t>{});

      TransitionCurve curve = curve_from_csv(read_text_file(base / entry.file));
      if (curve.field_gauss != entry.field_gauss || curve.kind != entry.kind) {
        throw IoError("curve file " + entry.file + " disagrees with the manifest");
      }
      curve.field_index = entry.field_index;
      curve.repetition = entry.repetition;
      curve.midpoint_in_core = entry.midpoint_in_core;
      for (std::size_t k : entry.clamped_samples) {
        if (k < curve.clamped.size()) curve.clamped[k] = 1;
      }
      ds.entries.push_back(std::move(entry));
      ds.curves.push_back(std::move(curve));
    }
    if (auto o = manifest.find("oracle"); o != manifest.end() && o->contains("ground_truth")) {
      for (const json& t : o->at("ground_truth")) {
        ds.ground_truth.push_back({t.at("t_star_K").get<double>(), t.at("delta_mK").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  } catch (const InputError& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  return ds;
}

}  // namespace casimirtc
