#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "qsoc/core/errors.hpp"

namespace qsoc {

// Probability vector over the chain grid.
struct InfoState {
  Eigen::VectorXd weights;

  double expectation(const Eigen::VectorXd& values) const { return weights.dot(values); }

  double mean(const Eigen::VectorXd& grid) const { return weights.dot(grid); }

  double variance(const Eigen::VectorXd& grid) const {
    const double m = mean(grid);
    double v = 0.0;
    for (int i = 0; i < grid.size(); ++i) v += weights(i) * (grid(i) - m) * (grid(i) - m);
    return v;
  }

  static InfoState uniform(int n) {
    return InfoState{Eigen::VectorXd::Constant(n, 1.0 / n)};
  }

  // Grid discretization of a Gaussian (point mass at the nearest node for
  // std = 0).
  static InfoState gaussian(const Eigen::VectorXd& grid, double mean, double std) {
    const int n = static_cast<int>(grid.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    if (std <= 0.0) {
      int best = 0;
      for (int i = 1; i < n; ++i)
        if (std::abs(grid(i) - mean) < std::abs(grid(best) - mean)) best = i;
      w(best) = 1.0;
      return InfoState{w};
    }
    for (int i = 0; i < n; ++i) {
      const double z = (grid(i) - mean) / std;
      w(i) = std::exp(-0.5 * z * z);
    }
    const double total = w.sum();
    if (!(total > 0.0)) throw NumericalError("InfoState::gaussian: all weights underflowed");
    return InfoState{w / total};
  }
};

// Nonnegative weight vector with an explicit magnitude factored into
// log_scale, so long-horizon exponential growth stays inside double range.
struct UnnormalizedInfoState {
  Eigen::VectorXd weights;
  double log_scale = 0.0;

  double total_mass() const { return weights.sum() * std::exp(log_scale); }

  InfoState normalized() const {
    const double s = weights.sum();
    if (!(s > 0.0)) throw NumericalError("UnnormalizedInfoState: cannot normalize zero state");
    return InfoState{weights / s};
  }
};

}  // namespace qsoc
