#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "qsoc/quantum/ops.hpp"

namespace qsoc {

// Hermitian, trace-one, PSD-up-to-repair state.
struct DensityState {
  Cmat rho;
};

// Hermitian PSD weight matrix with the magnitude factored into log_scale.
struct UnnormalizedDensityState {
  Cmat sigma;
  double log_scale = 0.0;
};

// Repair policy for explicit Euler steps, which are not completely positive.
// Deterministic master-equation steps keep the tight clip floor; stochastic
// filter steps overshoot pure states by O(dt) with mean zero, so their floor
// must stay loose or the one-sided truncation biases trajectory averages.
struct RepairPolicy {
  double clip_floor = 1e-8;    // eigenvalues in [-clip_floor, 0) are zeroed
  double abort_floor = 1e-3;   // anything below aborts the evolution

  static RepairPolicy master() { return RepairPolicy{1e-8, 1e-3}; }
  static RepairPolicy trajectory() { return RepairPolicy{2e-2, 2e-1}; }
};

struct RepairStats {
  long clipped = 0;          // eigenvalue clips applied
  double worst_negative = 0; // most negative eigenvalue seen (before repair)
  double worst_trace_defect = 0;
  double worst_hermiticity = 0;
};

inline double min_eigenvalue_hermitian(const Cmat& m) {
  if (m.rows() == 2) {
    const double tr = m.trace().real();
    const double det = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).real();
    const double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
    return 0.5 * (tr - disc);
  }
  Eigen::SelfAdjointEigenSolver<Cmat> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

// Hermitize, clip negative eigenvalues below the floor, renormalize the trace.
inline void repair_density(Cmat& rho, const RepairPolicy& policy, RepairStats* stats,
                           const char* where, int step) {
  if (stats) stats->worst_hermiticity = std::max(stats->worst_hermiticity,
                                                 hermiticity_defect(rho));
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (stats) stats->worst_trace_defect = std::max(stats->worst_trace_defect,
                                                  std::abs(tr - 1.0));
  if (!(tr > 0.0))
    throw NumericalError(std::string(where) + ": nonpositive trace at step " +
                         std::to_string(step));

  const double lambda_min = min_eigenvalue_hermitian(rho);
  if (stats) stats->worst_negative = std::min(stats->worst_negative, lambda_min);
  if (lambda_min < -policy.abort_floor * tr)
    throw NumericalError(std::string(where) + ": repair tolerance exceeded at step " +
                         std::to_string(step) + " (min eigenvalue " +
                         std::to_string(lambda_min) + ")");
  if (lambda_min < -policy.clip_floor * tr) {
    Eigen::SelfAdjointEigenSolver<Cmat> eig(rho);
    Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
    rho = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
    if (stats) ++stats->clipped;
  }
  rho /= rho.trace().real();
}

}  // namespace qsoc
