#pragma once

#include <stdexcept>
#include <string>

namespace casimirtc {

/// Argument outside the physical domain of an operation (negative field, negative depression, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or insufficient input data (bad plan, too few fields, mismatched grids, bad config).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A bracketed root solve that did not converge. Carries the final bracket.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double lo, double hi, double f_lo, double f_hi, int iterations)
      : std::runtime_error(what), lo_(lo), hi_(hi), f_lo_(f_lo), f_hi_(f_hi), iterations_(iterations) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double lo_, hi_, f_lo_, f_hi_;
  int iterations_;
};

/// Transition fit that failed to converge.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, int iterations, double last_step)
      : std::runtime_error(what), iterations_(iterations), last_step_(last_step) {}

  int iterations() const noexcept { return iterations_; }
  double last_step() const noexcept { return last_step_; }

 private:
  int iterations_;
  double last_step_;
};

/// Noise calibration could not reach its target inside the search bracket.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double sigma_lo, double sigma_hi, double delta_n_lo, double delta_n_hi)
      : std::runtime_error(what), sigma_lo_(sigma_lo), sigma_hi_(sigma_hi), delta_n_lo_(delta_n_lo), delta_n_hi_(delta_n_hi) {}

  double sigma_lo() const noexcept { return sigma_lo_; }
  double sigma_hi() const noexcept { return sigma_hi_; }
  double delta_n_lo() const noexcept { return delta_n_lo_; }
  double delta_n_hi() const noexcept { return delta_n_hi_; }

 private:
  double sigma_lo_, sigma_hi_, delta_n_lo_, delta_n_hi_;
};

/// File-system or parse failure in the run-file layer.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace casimirtc
