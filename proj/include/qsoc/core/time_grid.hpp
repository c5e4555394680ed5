#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "qsoc/core/errors.hpp"

namespace qsoc {

// Uniform grid over [0, T] with n_steps * dt == T.
struct TimeGrid {
  double horizon = 0.0;
  double dt = 0.0;
  int n_steps = 0;

  double time_at(int k) const { return k == n_steps ? horizon : k * dt; }
};

// Rejects (T, dt) pairs whose ratio is not an integer to within half an ulp.
inline TimeGrid make_time_grid(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw ValidationError("make_time_grid: T and dt must be positive (T=" +
                          std::to_string(horizon) + ", dt=" + std::to_string(dt) + ")");
  }
  const double ratio = horizon / dt;
  if (ratio > 1e9) {
    throw ValidationError("make_time_grid: T/dt = " + std::to_string(ratio) + " exceeds 1e9 steps");
  }
  const double rounded = std::round(ratio);
  const double ulp = std::nextafter(ratio, std::numeric_limits<double>::infinity()) - ratio;
  if (std::abs(ratio - rounded) > 0.5 * ulp) {
    throw ValidationError("make_time_grid: T/dt = " + std::to_string(ratio) +
                          " is not an integer; choose dt dividing T exactly");
  }
  TimeGrid grid;
  grid.horizon = horizon;
  grid.dt = dt;
  grid.n_steps = static_cast<int>(rounded);
  return grid;
}

}  // namespace qsoc
