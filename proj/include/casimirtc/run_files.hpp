#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "casimirtc/protocol.hpp"

namespace casimirtc {

inline constexpr std::string_view kRunFormatVersion = "casimirtc-run/1";

/// Locale-independent, 17 significant digits; parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

/// Per-curve run file:
///   # field_gauss=<v>
///   # kind=film|cavity
///   # seed_path=<path>
///   temperature_K,resistance_ohm
///   <T>,<R>
std::string curve_to_csv(const TransitionCurve& curve);
/// Inverse of curve_to_csv. Fields not stored in the file (index, repetition, flags) are left default.
TransitionCurve curve_from_csv(std::string_view text);

struct ManifestEntry {
  std::string file;  ///< relative to the manifest directory
  double field_gauss = 0.0;
  SampleKind kind = SampleKind::film;
  int field_index = 0;
  int repetition = 0;
  std::string seed_path;
  bool midpoint_in_core = true;
  std::vector<std::size_t> clamped_samples;
};

struct LoadedDataset {
  nlohmann::json config;
  std::vector<ManifestEntry> entries;
  std::vector<TransitionCurve> curves;
  /// Present only when the manifest carries an oracle section. Analysis code never reads it.
  std::vector<oracle::GroundTruth> ground_truth;
};

/// Writes curves/<name>.csv for every curve and manifest.json. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                                    const nlohmann::json& config);

/// Throws IoError when the manifest or any curve file is missing or malformed.
LoadedDataset read_dataset(const std::filesystem::path& manifest_path);

/// Serializes a JSON document with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace casimirtc
