#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "casimirtc/model.hpp"

namespace casimirtc {

/// Measurement hardware emulation: coil, current readout, thermometry floor and the resistive transition.
struct InstrumentConfig {
  double coil_constant = 3.0;          ///< G/mA
  double current_resolution = 1e-3;    ///< relative
  double base_temperature_k = 0.300;   ///< K
  double normal_resistance = 10.0;     ///< R_n, ohm
  double transition_width_mk = 50.0;   ///< 10%-90% width, mK
  double resistance_noise = 0.074;     ///< Gaussian sigma per sample, ohm
  double temperature_jitter_mk = 0.0;  ///< Gaussian sigma on the sample temperature, mK
  std::uint64_t seed = 2007;

  void validate() const;

  /// Copy with every noise term set to zero.
  InstrumentConfig noiseless() const;
};

struct SampleGeometry {
  double al_thickness_nm = 10.0;
  double oxide_thickness_nm = 10.0;
  double back_layer_thickness_nm = 100.0;
  double width_um = 20.0;
  double length_um = 20.0;
  SampleKind kind = SampleKind::cavity;

  void validate() const;
};

/// erf argument at which the transition crosses 90% of R_n: erf(x) = 0.8.
inline constexpr double kErfTenNinety = 0.90619380243682322;

/// Rounds a current reading to the display grid of a relative-resolution meter.
/// The grid step is current_resolution * 10^floor(log10 I), so the relative error is at most resolution / 2.
double quantize_current(const InstrumentConfig& cfg, double current_ma);

/// Field produced by the coil for a quantized current reading.
double coil_field(const InstrumentConfig& cfg, double current_ma);

/// Realized field for a requested field: the current is set to H / coil_constant and read back quantized.
double realized_field(const InstrumentConfig& cfg, double requested_gauss);

/// Noiseless erf transition, R_n/2 at t_star, 10%-90% over transition_width.
double transition_resistance(const InstrumentConfig& cfg, double t_k, double t_star_k);

/// Per-curve Gaussian noise source. Substreams are derived from the master seed by splitmix64 over a key.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_key);

  double gaussian();
  std::uint64_t draws() const { return draws_; }

  /// splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t x);
  /// Stream key for (trial, field index, kind, repetition).
  static std::uint64_t key(std::uint64_t trial, std::uint64_t field_index, SampleKind kind, std::uint64_t repetition);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t draws_ = 0;
};

struct Measurement {
  double temperature_k = 0.0;  ///< recorded thermometer temperature
  double resistance = 0.0;
  bool clamped = false;        ///< setpoint was below the base temperature
};

/// One four-wire reading at a temperature setpoint. Draw order: temperature jitter, then resistance noise.
Measurement measure_resistance(const InstrumentConfig& cfg, double t_setpoint_k, double t_star_k, NoiseStream& noise);

}  // namespace casimirtc
