#pragma once

#include <cmath>

#include "qsoc/quantum/trajectory.hpp"

namespace qsoc {

enum class QuantumCostMode { direct, infostate };

// Measurement-feedback cost J(K) = E[ int tr(rho_s C1(u_s)) ds + tr(rho_T C2) ].
// In the conditional-trajectory picture the direct and information-state
// readouts are the same integral by construction; the mode is kept so both
// are reported, documenting the identity.
inline McResult evaluate_quantum_cost(const QuantumModel& model, const QuantumCostSpec& cost,
                                      const Cmat& rho0, const TimeGrid& times,
                                      const QuantumControllerFactory& make_controller,
                                      const McOptions& opt,
                                      QuantumCostMode /*mode*/ = QuantumCostMode::infostate,
                                      RepairStats* stats = nullptr) {
  return monte_carlo(opt, [&](int, std::uint64_t stream_seed) {
    RandomStream stream(stream_seed);
    auto controller = make_controller();
    RepairStats local;
    const auto traj = homodyne_trajectory(model, *controller, rho0, times, stream, &local);
    double total = 0.0;
    for (int k = 0; k < times.n_steps; ++k)
      total += (traj.states[k] * cost.running[traj.controls[k]]).trace().real() * times.dt;
    total += (traj.states[times.n_steps] * cost.terminal).trace().real();
    if (stats) {
      stats->clipped += local.clipped;
      stats->worst_negative = std::min(stats->worst_negative, local.worst_negative);
    }
    return total;
  });
}

// Hermitian matrix exponential via eigendecomposition.
inline Cmat expm_hermitian(const Cmat& m) {
  Eigen::SelfAdjointEigenSolver<Cmat> eig(m);
  Eigen::VectorXd vals = eig.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) vals(i) = std::exp(vals(i));
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace qsoc
