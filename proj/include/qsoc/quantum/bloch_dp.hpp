#pragma once

#include "qsoc/dp/tables.hpp"
#include "qsoc/quantum/bloch_grid.hpp"
#include "qsoc/quantum/trajectory.hpp"

namespace qsoc {

struct BlochDpResult {
  ValueTable value;
  PolicyTable policy;
  long projections = 0;
};

// Qubit measurement-feedback dynamic programming: the same backward recursion
// as the classical information-state DP with the density matrix in place of
// the probability vector. Observation increments quantized to +-sqrt(dt) with
// equal weight, one quantum filter step as the transition, trilinear value
// interpolation on the Bloch ball, lowest-index argmin ties.
inline BlochDpResult qubit_mfc_value_iteration(const QuantumModel& model,
                                               const QuantumCostSpec& cost,
                                               const BlochGrid& grid, const TimeGrid& times,
                                               const DpOptions& opt = {}) {
  if (model.dim != 2)
    throw ValidationError("qubit_mfc_value_iteration: model must be a qubit");
  if (!opt.allow_large) {
    if (grid.size() > 10000)
      throw ValidationError("qubit_mfc_value_iteration guardrail: more than 1e4 grid points");
    if (times.n_steps > 200)
      throw ValidationError("qubit_mfc_value_iteration guardrail: more than 200 time steps");
  }
  const int n_points = grid.size();
  const int n_controls = static_cast<int>(model.control_set.size());

  BlochDpResult result;
  result.value.times = times;
  result.value.values.resize(n_points, times.n_steps + 1);
  result.policy.times = times;
  result.policy.controls.resize(n_points, std::max(times.n_steps, 0));

  std::vector<Cmat> node_states;
  node_states.reserve(n_points);
  for (int i = 0; i < n_points; ++i) node_states.push_back(density_from_bloch(grid.point(i)));

  for (int i = 0; i < n_points; ++i)
    result.value.values(i, times.n_steps) = (node_states[i] * cost.terminal).trace().real();

  const double sqrt_dt = std::sqrt(times.dt);
  for (int t = times.n_steps - 1; t >= 0; --t) {
    const Eigen::VectorXd next = result.value.values.col(t + 1);
    for (int i = 0; i < n_points; ++i) {
      const Cmat& rho = node_states[i];
      double best = 0.0;
      int best_u = 0;
      for (int a = 0; a < n_controls; ++a) {
        double v = (rho * cost.running[a]).trace().real() * times.dt;
        for (const double dY : {sqrt_dt, -sqrt_dt}) {
          const Cmat moved = quantum_filter_step(rho, model, a, dY, times.dt);
          v += 0.5 * grid.interpolate(next, bloch_vector(moved), &result.projections);
        }
        if (a == 0 || v < best) {
          best = v;
          best_u = a;
        }
      }
      result.value.values(i, t) = best;
      result.policy.controls(i, t) = best_u;
    }
  }
  return result;
}

// Separation controller: quantum filter + nearest-node policy lookup.
class QubitDpController final : public QuantumController {
 public:
  QubitDpController(const QuantumModel* model, const BlochGrid* grid, PolicyTable policy,
                    Cmat rho0)
      : model_(model), grid_(grid), policy_(std::move(policy)), rho0_(std::move(rho0)),
        rho_(rho0_) {}

  void reset() override {
    rho_ = rho0_;
    step_ = 0;
    last_u_ = 0;
  }

  int feed(double, double dY, double dt) override {
    if (dt > 0.0) {
      rho_ = quantum_filter_step(rho_, *model_, last_u_, dY, dt);
      ++step_;
    }
    const int t = std::min(step_, static_cast<int>(policy_.controls.cols()) - 1);
    last_u_ = policy_.controls(grid_->nearest(bloch_vector(rho_)), t);
    return last_u_;
  }

 private:
  const QuantumModel* model_;
  const BlochGrid* grid_;
  PolicyTable policy_;
  Cmat rho0_;
  Cmat rho_;
  int last_u_ = 0;
  int step_ = 0;
};

inline QuantumControllerFactory qubit_dp_controller(const QuantumModel* model,
                                                    const BlochGrid* grid,
                                                    const PolicyTable& policy,
                                                    const Cmat& rho0) {
  return [=] { return std::make_unique<QubitDpController>(model, grid, policy, rho0); };
}

}  // namespace qsoc
