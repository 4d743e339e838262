#pragma once

#include <cmath>
#include <limits>

#include "casimirtc/errors.hpp"

namespace casimirtc {

struct RootOptions {
  double f_tolerance = 1e-12;
  int max_iterations = 200;
};

struct RootResult {
  double x = 0.0;
  double f = 0.0;
  int iterations = 0;
};

// Bisection safeguarded secant on a sign-changing bracket [lo, hi].
//
// The bracket is kept valid at every step; a secant step is accepted only when it lands strictly inside
// the bracket and the previous step shrank the bracket by at least half, otherwise the midpoint is used.
// Stops when |f| <= f_tolerance or the bracket collapses to adjacent doubles.
template <class F>
RootResult solve_bracketed(F&& f, double lo, double hi, const RootOptions& opt = {}) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return {lo, f_lo, 0};
  if (f_hi == 0.0) return {hi, f_hi, 0};
  if (!std::isfinite(f_lo) || !std::isfinite(f_hi) || std::signbit(f_lo) == std::signbit(f_hi)) {
    throw SolverError("root not bracketed", lo, hi, f_lo, f_hi, 0);
  }

  double x_prev = lo, f_prev = f_lo;
  double x_cur = hi, f_cur = f_hi;
  double last_width = hi - lo;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double width = hi - lo;
    double x_next = 0.5 * (lo + hi);
    if (f_cur != f_prev && width <= 0.5 * last_width) {
      const double x_sec = x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev);
      if (x_sec > lo && x_sec < hi) x_next = x_sec;
    }
    last_width = width;

    const double f_next = f(x_next);
    if (!std::isfinite(f_next)) {
      throw SolverError("non-finite residual inside bracket", lo, hi, f_lo, f_hi, it);
    }
    x_prev = x_cur;
    f_prev = f_cur;
    x_cur = x_next;
    f_cur = f_next;

    if (std::abs(f_next) <= opt.f_tolerance) return {x_next, f_next, it};

    if (std::signbit(f_next) == std::signbit(f_lo)) {
      lo = x_next;
      f_lo = f_next;
    } else {
      hi = x_next;
      f_hi = f_next;
    }
    if (std::nextafter(lo, hi) >= hi) {
      return std::abs(f_lo) < std::abs(f_hi) ? RootResult{lo, f_lo, it} : RootResult{hi, f_hi, it};
    }
  }
  throw SolverError("root solve exceeded iteration limit", lo, hi, f_lo, f_hi, opt.max_iterations);
}

}  // namespace casimirtc
