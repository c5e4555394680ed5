#pragma once

#include <cmath>
#include <vector>

#include "qsoc/classical/monte_carlo.hpp"
#include "qsoc/filtering/grid_filter.hpp"

namespace qsoc {

enum class InfostateMode { risk_neutral, risk_sensitive };

// Re-expresses the cost through the information state.
//
// Risk-neutral: simulate the true pair (x, y), run the chain filter on the
// observation record and average the pi-expressed cost
//   sum_k pi_k(L(., u_k)) dt + pi_T(Phi).
// Risk-sensitive: simulate y as a standard Wiener process under the reference
// measure, propagate the unnormalized state sigma and average
//   sigma_T(exp(mu Phi)) * exp(log_scale).
//
// Controls may take any value (the chain rates are recomputed per step), so
// continuous laws such as LQG feed through unchanged.
inline McResult cost_via_infostate(const ClassicalModel& model, const MarkovChainModel& chain,
                                   const CostSpec& cost, const InitialState& init,
                                   const TimeGrid& times, const ControllerFactory& make_controller,
                                   const McOptions& opt, InfostateMode mode,
                                   FilterStats* stats = nullptr) {
  const int n = chain.n_states();
  const Eigen::VectorXd terminal = terminal_cost_on_grid(chain, cost);

  const double init_std = init.stddev.size() > 0 ? init.stddev(0) : 0.0;
  const InfoState pi0 = InfoState::gaussian(chain.grid, init.mean(0), init_std);

  if (mode == InfostateMode::risk_neutral) {
    return monte_carlo(opt, [&](int, std::uint64_t stream_seed) {
      RandomStream stream(stream_seed);
      const Eigen::VectorXd x0 = init.sample(stream);
      const WienerPath path = sample_wiener(times, 1 + model.obs_dim, stream, stream_seed);
      auto controller = make_controller();
      const Trajectory traj = euler_maruyama(model.drift, model.diffusion, model.observation,
                                             model.obs_dim, *controller, path, x0);
      InfoState pi = pi0;
      double total = 0.0;
      FilterStats local;
      for (int k = 0; k < times.n_steps; ++k) {
        const Eigen::VectorXd& u = traj.controls[k];
        for (int i = 0; i < n; ++i)
          total += pi.weights(i) *
                   cost.running(Eigen::VectorXd::Constant(1, chain.grid(i)), u) * times.dt;
        const double dy = traj.observations[k + 1](0) - traj.observations[k](0);
        pi = filter_step(pi, model, chain, u, dy, times.dt, &local);
      }
      total += pi.expectation(terminal);
      if (stats) {
        stats->clipped += local.clipped;
        stats->rebalances += local.rebalances;
      }
      return total;
    });
  }

  if (!(cost.mu > 0.0))
    throw ValidationError("cost_via_infostate: risk-sensitive mode requires mu > 0");
  Eigen::VectorXd exp_terminal(terminal.size());
  for (int i = 0; i < terminal.size(); ++i) exp_terminal(i) = std::exp(cost.mu * terminal(i));

  McResult result = monte_carlo(opt, [&](int, std::uint64_t stream_seed) {
    RandomStream stream(stream_seed);
    auto controller = make_controller();
    controller->reset();
    Eigen::VectorXd u = controller->feed(0.0, Eigen::VectorXd::Zero(model.obs_dim), 0.0);
    UnnormalizedInfoState sigma{pi0.weights, 0.0};
    const double sqrt_dt = std::sqrt(times.dt);
    FilterStats local;
    for (int k = 0; k < times.n_steps; ++k) {
      const double dy = sqrt_dt * stream.gaussian();  // reference measure: y is Wiener
      sigma = rs_filter_step(sigma, model, chain, u, dy, times.dt, cost.mu, cost, &local);
      if (k + 1 < times.n_steps) {
        u = controller->feed(times.time_at(k + 1), Eigen::VectorXd::Constant(1, dy), times.dt);
      }
    }
    if (stats) {
      stats->clipped += local.clipped;
      stats->rebalances += local.rebalances;
    }
    return sigma.weights.dot(exp_terminal) * std::exp(sigma.log_scale);
  });
  if (result.estimate.std_error > 0.5 * std::abs(result.estimate.value)) {
    result.estimate.warnings.push_back(
        "heavy-tailed exponential cost: standard error exceeds 50% of the mean");
  }
  return result;
}

}  // namespace qsoc
