#pragma once

#include <vector>

#include "qsoc/core/time_grid.hpp"
#include "qsoc/quantum/density.hpp"
#include "qsoc/quantum/lindblad.hpp"

namespace qsoc {

// Deterministic master-equation evolution: explicit Euler rho <- rho + L'(rho) dt
// with hermitize-and-repair each step. The schedule holds one control index per
// step.
inline std::vector<Cmat> master_evolve(const QuantumModel& model,
                                       const std::vector<int>& schedule, const Cmat& rho0,
                                       const TimeGrid& times, RepairStats* stats = nullptr) {
  if (static_cast<int>(schedule.size()) != times.n_steps)
    throw ValidationError("master_evolve: schedule length must equal n_steps");
  std::vector<Cmat> out;
  out.reserve(times.n_steps + 1);
  Cmat rho = rho0;
  repair_density(rho, RepairPolicy::master(), stats, "master_evolve", 0);
  out.push_back(rho);
  for (int k = 0; k < times.n_steps; ++k) {
    rho += times.dt * lindblad_adjoint_apply(model, schedule[k], rho);
    repair_density(rho, RepairPolicy::master(), stats, "master_evolve", k + 1);
    out.push_back(rho);
  }
  return out;
}

inline std::vector<Cmat> master_evolve(const QuantumModel& model, int u_index, const Cmat& rho0,
                                       const TimeGrid& times, RepairStats* stats = nullptr) {
  return master_evolve(model, std::vector<int>(times.n_steps, u_index), rho0, times, stats);
}

}  // namespace qsoc
