#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "qsoc/core/errors.hpp"
#include "qsoc/core/rng.hpp"
#include "qsoc/core/time_grid.hpp"

namespace qsoc {

// n_steps x dim matrix of independent Gaussian increments with variance dt.
// Identical (grid, dim, seed) always reproduces the identical path.
struct WienerPath {
  TimeGrid grid;
  int dim = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd increments;  // row k holds the increments over [t_k, t_{k+1})
};

inline WienerPath sample_wiener(const TimeGrid& grid, int dim, RandomStream& stream,
                                std::uint64_t seed_label = 0) {
  if (dim < 1) throw ValidationError("sample_wiener: dim must be >= 1");
  WienerPath path;
  path.grid = grid;
  path.dim = dim;
  path.seed = seed_label;
  path.increments.resize(grid.n_steps, dim);
  const double scale = std::sqrt(grid.dt);
  for (int k = 0; k < grid.n_steps; ++k)
    for (int d = 0; d < dim; ++d) path.increments(k, d) = scale * stream.gaussian();
  return path;
}

inline WienerPath sample_wiener(const TimeGrid& grid, int dim, std::uint64_t seed) {
  RandomStream stream(seed);
  return sample_wiener(grid, dim, stream, seed);
}

}  // namespace qsoc
