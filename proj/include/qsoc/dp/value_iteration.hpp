#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qsoc/dp/simplex_grid.hpp"
#include "qsoc/dp/tables.hpp"
#include "qsoc/filtering/grid_filter.hpp"

namespace qsoc {

struct DpResult {
  ValueTable value;
  PolicyTable policy;
  long projections = 0;  // interpolation targets projected back onto the simplex
};

namespace detail {

inline void check_dp_guardrails(int n_states, int mesh, int n_steps, const DpOptions& opt) {
  if (opt.allow_large) return;
  if (n_states > 4)
    throw ValidationError("value iteration guardrail: chain has more than 4 states "
                          "(set allow_large to override)");
  if (mesh > 40) throw ValidationError("value iteration guardrail: mesh exceeds 40");
  if (n_steps > 1000) throw ValidationError("value iteration guardrail: more than 1e3 steps");
}

}  // namespace detail

// Backward dynamic programming on the discretized information-state simplex.
// Observation increments are quantized to +-sqrt(dt) with equal weight (the
// reference-measure approximation), the state map is one filter step, and
// values are evaluated by barycentric interpolation:
//   V(pi, t) = min_u { L~(pi, u) dt + 1/2 sum_± V(F(pi, u, ±sqrt(dt)), t+dt) }.
inline DpResult value_iteration(const MarkovChainModel& chain, const CostSpec& cost,
                                const SimplexGrid& grid, const TimeGrid& times,
                                const DpOptions& opt = {}) {
  const int n_points = grid.size();
  const int n_controls = chain.n_controls();
  detail::check_dp_guardrails(chain.n_states(), grid.mesh(), times.n_steps, opt);
  if (grid.n_states() != chain.n_states())
    throw ValidationError("value_iteration: grid dimension does not match the chain");

  std::vector<Eigen::VectorXd> running;
  for (int a = 0; a < n_controls; ++a) running.push_back(running_cost_on_grid(chain, cost, a));
  const Eigen::VectorXd terminal = terminal_cost_on_grid(chain, cost);

  DpResult result;
  result.value.times = times;
  result.value.values.resize(n_points, times.n_steps + 1);
  result.policy.times = times;
  result.policy.controls.resize(n_points, std::max(times.n_steps, 0));

  for (int i = 0; i < n_points; ++i)
    result.value.values(i, times.n_steps) = grid.point(i).dot(terminal);

  const double sqrt_dt = std::sqrt(times.dt);
  for (int t = times.n_steps - 1; t >= 0; --t) {
    const Eigen::VectorXd next = result.value.values.col(t + 1);
    for (int i = 0; i < n_points; ++i) {
      const InfoState pi{grid.point(i)};
      double best = 0.0;
      int best_u = 0;
      for (int a = 0; a < n_controls; ++a) {
        double v = pi.weights.dot(running[a]) * times.dt;
        for (const double dy : {sqrt_dt, -sqrt_dt}) {
          const InfoState moved = filter_step(pi, chain, a, dy, times.dt);
          v += 0.5 * grid.interpolate(next, moved.weights, &result.projections);
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

// Risk-sensitive variant. The running cost rides inside the unnormalized state
// evolution, and positive homogeneity V(c sigma, t) = c V(sigma, t) lets the
// table live on sum-normalized states only:
//   V(sigma^, t) = min_u 1/2 sum_± c_±(sigma^, u) V(sigma^'_±, t+dt),
// where c is the post-step mass and sigma^' the renormalized step output.
inline DpResult rs_value_iteration(const MarkovChainModel& chain, const CostSpec& cost,
                                   const SimplexGrid& grid, const TimeGrid& times,
                                   const DpOptions& opt = {}) {
  if (!(cost.mu > 0.0)) throw ValidationError("rs_value_iteration: mu must be positive");
  const int n_points = grid.size();
  const int n_controls = chain.n_controls();
  detail::check_dp_guardrails(chain.n_states(), grid.mesh(), times.n_steps, opt);
  if (grid.n_states() != chain.n_states())
    throw ValidationError("rs_value_iteration: grid dimension does not match the chain");

  std::vector<Eigen::VectorXd> running;
  for (int a = 0; a < n_controls; ++a) running.push_back(running_cost_on_grid(chain, cost, a));
  const Eigen::VectorXd terminal = terminal_cost_on_grid(chain, cost);
  Eigen::VectorXd exp_terminal(terminal.size());
  for (int i = 0; i < terminal.size(); ++i) exp_terminal(i) = std::exp(cost.mu * terminal(i));

  DpResult result;
  result.value.times = times;
  result.value.values.resize(n_points, times.n_steps + 1);
  result.policy.times = times;
  result.policy.controls.resize(n_points, std::max(times.n_steps, 0));

  for (int i = 0; i < n_points; ++i)
    result.value.values(i, times.n_steps) = grid.point(i).dot(exp_terminal);

  const double sqrt_dt = std::sqrt(times.dt);
  for (int t = times.n_steps - 1; t >= 0; --t) {
    const Eigen::VectorXd next = result.value.values.col(t + 1);
    for (int i = 0; i < n_points; ++i) {
      double best = 0.0;
      int best_u = 0;
      for (int a = 0; a < n_controls; ++a) {
        double v = 0.0;
        for (const double dy : {sqrt_dt, -sqrt_dt}) {
          UnnormalizedInfoState sigma{grid.point(i), 0.0};
          sigma = rs_filter_step(sigma, chain, a, dy, times.dt, cost.mu, running[a]);
          const double mass = sigma.weights.sum() * std::exp(sigma.log_scale);
          if (!(mass > 0.0)) throw NumericalError("rs_value_iteration: vanished state mass");
          v += 0.5 * mass *
               grid.interpolate(next, sigma.weights / sigma.weights.sum(),
                                &result.projections);
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

// Value of an arbitrary (possibly unnormalized) state via homogeneity.
inline double rs_value_at(const SimplexGrid& grid, const ValueTable& table, int time_index,
                          const UnnormalizedInfoState& sigma) {
  const double mass = sigma.weights.sum() * std::exp(sigma.log_scale);
  return mass * grid.interpolate(table.values.col(time_index),
                                 sigma.weights / sigma.weights.sum());
}

}  // namespace qsoc
