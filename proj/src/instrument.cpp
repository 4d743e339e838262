#include "casimirtc/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "casimirtc/errors.hpp"

namespace casimirtc {

void InstrumentConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("instrument: ") + what);
  };
  check(coil_constant > 0.0 && std::isfinite(coil_constant), "coil_constant must be > 0");
  check(current_resolution > 0.0 && current_resolution < 1.0, "current_resolution must be in (0, 1)");
  check(base_temperature_k > 0.0 && std::isfinite(base_temperature_k), "base_temperature must be > 0");
  check(normal_resistance > 0.0 && std::isfinite(normal_resistance), "normal_resistance must be > 0");
  check(transition_width_mk > 0.0 && std::isfinite(transition_width_mk), "transition_width must be > 0");
  check(resistance_noise >= 0.0 && std::isfinite(resistance_noise), "resistance_noise must be >= 0");
  check(temperature_jitter_mk >= 0.0 && std::isfinite(temperature_jitter_mk), "temperature_jitter must be >= 0");
}

InstrumentConfig InstrumentConfig::noiseless() const {
  InstrumentConfig c = *this;
  c.resistance_noise = 0.0;
  c.temperature_jitter_mk = 0.0;
  return c;
}

void SampleGeometry::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw DomainError(std::string("geometry: ") + what + " must be > 0");
  };
  positive(al_thickness_nm, "al_thickness");
  positive(oxide_thickness_nm, "oxide_thickness");
  positive(width_um, "width");
  positive(length_um, "length");
  if (kind == SampleKind::cavity) positive(back_layer_thickness_nm, "back_layer_thickness");
}

double quantize_current(const InstrumentConfig& cfg, double current_ma) {
  if (!(current_ma >= 0.0) || !std::isfinite(current_ma)) throw DomainError("current must be finite and >= 0");
  if (current_ma == 0.0) return 0.0;
  const double decade = std::pow(10.0, std::floor(std::log10(current_ma)));
  const double step = cfg.current_resolution * decade;
  return std::round(current_ma / step) * step;
}

double coil_field(const InstrumentConfig& cfg, double current_ma) {
  return cfg.coil_constant * quantize_current(cfg, current_ma);
}

double realized_field(const InstrumentConfig& cfg, double requested_gauss) {
  if (!(requested_gauss >= 0.0)) throw DomainError("requested field must be >= 0");
  return coil_field(cfg, requested_gauss / cfg.coil_constant);
}

double transition_resistance(const InstrumentConfig& cfg, double t_k, double t_star_k) {
  if (!(t_k > 0.0)) throw DomainError("temperature must be > 0");
  const double scale_k = cfg.transition_width_mk * 1e-3 / (2.0 * kErfTenNinety);
  return 0.5 * cfg.normal_resistance * (1.0 + std::erf((t_k - t_star_k) / scale_k));
}

std::uint64_t NoiseStream::mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t NoiseStream::key(std::uint64_t trial, std::uint64_t field_index, SampleKind kind,
                               std::uint64_t repetition) {
  std::uint64_t k = mix(trial);
  k = mix(k ^ field_index);
  k = mix(k ^ (kind == SampleKind::film ? 0x46ULL : 0x43ULL));
  return mix(k ^ repetition);
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_key)
    : engine_(mix(master_seed ^ mix(stream_key))) {}

double NoiseStream::gaussian() {
  ++draws_;
  return normal_(engine_);
}

Measurement measure_resistance(const InstrumentConfig& cfg, double t_setpoint_k, double t_star_k, NoiseStream& noise) {
  Measurement m;
  m.temperature_k = t_setpoint_k;
  if (t_setpoint_k < cfg.base_temperature_k) {
    m.temperature_k = cfg.base_temperature_k;
    m.clamped = true;
  }
  // Both draws always happen so the stream position does not depend on the noise settings.
  const double jitter_k = noise.gaussian() * cfg.temperature_jitter_mk * 1e-3;
  const double r_noise = noise.gaussian() * cfg.resistance_noise;
  const double t_sample = std::max(m.temperature_k + jitter_k, cfg.base_temperature_k);
  m.resistance = transition_resistance(cfg, t_sample, t_star_k) + r_noise;
  return m;
}

}  // namespace casimirtc
