#pragma once

#include <cmath>
#include <string>

#include "qsoc/classical/model.hpp"
#include "qsoc/core/monte_carlo.hpp"

namespace qsoc {

inline double trajectory_cost(const Trajectory& traj, const CostSpec& cost) {
  double total = 0.0;
  const double dt = traj.grid.dt;
  for (int k = 0; k < traj.grid.n_steps; ++k)
    total += cost.running(traj.states[k], traj.controls[k]) * dt;
  total += cost.terminal(traj.states[traj.grid.n_steps]);
  return total;
}

// Sample mean of the left-rectangle discretized cost
// J(K) = E[ int_0^T L(x,u) dt + Phi(x_T) ] over independent closed-loop paths.
inline McResult evaluate_cost_mc(const ClassicalModel& model, const CostSpec& cost,
                                 const InitialState& init, const TimeGrid& times,
                                 const ControllerFactory& make_controller,
                                 const McOptions& opt) {
  const int path_dim = 1 + model.obs_dim;  // scalar state noise + observation noise
  return monte_carlo(opt, [&](int path_index, std::uint64_t stream_seed) {
    RandomStream stream(stream_seed);
    const Eigen::VectorXd x0 = init.sample(stream);
    const WienerPath path = sample_wiener(times, path_dim, stream, stream_seed);
    auto controller = make_controller();
    try {
      const Trajectory traj = euler_maruyama(model.drift, model.diffusion, model.observation,
                                             model.obs_dim, *controller, path, x0);
      return trajectory_cost(traj, cost);
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " (path " + std::to_string(path_index) +
                           ")");
    }
  });
}

// Sample mean of exp(mu * discretized total cost). Warns when the exponential
// is heavy-tailed enough that the standard error exceeds half the mean.
inline McResult evaluate_rs_cost_mc(const ClassicalModel& model, const CostSpec& cost,
                                    const InitialState& init, const TimeGrid& times,
                                    const ControllerFactory& make_controller,
                                    const McOptions& opt) {
  if (!(cost.mu > 0.0))
    throw ValidationError("evaluate_rs_cost_mc: risk parameter mu must be positive");
  const int path_dim = 1 + model.obs_dim;
  McResult result = monte_carlo(opt, [&](int path_index, std::uint64_t stream_seed) {
    RandomStream stream(stream_seed);
    const Eigen::VectorXd x0 = init.sample(stream);
    const WienerPath path = sample_wiener(times, path_dim, stream, stream_seed);
    auto controller = make_controller();
    try {
      const Trajectory traj = euler_maruyama(model.drift, model.diffusion, model.observation,
                                             model.obs_dim, *controller, path, x0);
      return std::exp(cost.mu * trajectory_cost(traj, cost));
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " (path " + std::to_string(path_index) +
                           ")");
    }
  });
  if (result.estimate.std_error > 0.5 * std::abs(result.estimate.value)) {
    result.estimate.warnings.push_back(
        "heavy-tailed exponential cost: standard error exceeds 50% of the mean");
  }
  return result;
}

}  // namespace qsoc
